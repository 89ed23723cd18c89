//! Mean-square-displacement estimators and cross-replica statistics.

use crate::error::{ensure_positive, invalid, Result};

/// Multiplier of the standard error in reported confidence half-widths.
pub const CI_MULTIPLIER: f64 = 3.0;

/// `displacement^2 / (2 t)`.
pub fn u_of_t(displacement: f64, t: f64) -> Result<f64> {
    ensure_positive("time", t)?;
    Ok(displacement * displacement / (2.0 * t))
}

/// Control-variate estimator `(displacement^2 - xi^2) / (2 t) + d_psi`.
pub fn v_of_t(displacement: f64, xi: f64, t: f64, d_psi: f64) -> Result<f64> {
    ensure_positive("time", t)?;
    Ok(displacement * displacement / (2.0 * t) - xi * xi / (2.0 * t) + d_psi)
}

/// One explicit update of the stochastic integral part of `xi`:
/// `scale * grad_p psi(q_n, p_n) . g_tilde_n`.
#[inline]
pub fn xi_increment<const D: usize>(scale: f64, grad: &[f64; D], g_tilde: &[f64; D]) -> f64 {
    scale * grad.iter().zip(g_tilde).map(|(a, b)| a * b).sum::<f64>()
}

/// Per-replica record: running displacement and `xi` at each snapshot time.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct ReplicaOutcome {
    pub displacement: Vec<f64>,
    pub xi: Vec<f64>,
}

/// Streaming mean and variance (Welford with Chan's merge).
#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub struct Moments {
    pub count: u64,
    pub mean: f64,
    m2: f64,
}

impl Moments {
    pub fn push(&mut self, x: f64) {
        self.count += 1;
        let delta = x - self.mean;
        self.mean += delta / self.count as f64;
        self.m2 += delta * (x - self.mean);
    }

    pub fn merge(&self, other: &Moments) -> Moments {
        if self.count == 0 {
            return *other;
        }
        if other.count == 0 {
            return *self;
        }
        let n = self.count + other.count;
        let delta = other.mean - self.mean;
        let mean = self.mean + delta * other.count as f64 / n as f64;
        let m2 = self.m2
            + other.m2
            + delta * delta * (self.count as f64 * other.count as f64) / n as f64;
        Moments { count: n, mean, m2 }
    }

    /// Unbiased sample variance.
    pub fn variance(&self) -> f64 {
        if self.count < 2 {
            0.0
        } else {
            (self.m2 / (self.count - 1) as f64).max(0.0)
        }
    }

    pub fn std(&self) -> f64 {
        self.variance().sqrt()
    }

    pub fn stderr(&self) -> f64 {
        if self.count == 0 {
            0.0
        } else {
            self.std() / (self.count as f64).sqrt()
        }
    }
}

impl FromIterator<f64> for Moments {
    fn from_iter<I: IntoIterator<Item = f64>>(iter: I) -> Self {
        let mut m = Moments::default();
        for x in iter {
            m.push(x);
        }
        m
    }
}

/// Sample statistics of `u` and `v` at each snapshot time.
#[derive(Clone, Debug, PartialEq)]
pub struct EstimatorSeries {
    pub times: Vec<f64>,
    pub u: Vec<Moments>,
    pub v: Vec<Moments>,
    pub replicas: usize,
    pub d_psi: f64,
}

impl EstimatorSeries {
    pub fn mean_u(&self, k: usize) -> f64 {
        self.u[k].mean
    }
    pub fn std_u(&self, k: usize) -> f64 {
        self.u[k].std()
    }
    pub fn mean_v(&self, k: usize) -> f64 {
        self.v[k].mean
    }
    pub fn std_v(&self, k: usize) -> f64 {
        self.v[k].std()
    }
    pub fn ci_halfwidth_u(&self, k: usize) -> f64 {
        CI_MULTIPLIER * self.u[k].stderr()
    }
    pub fn ci_halfwidth_v(&self, k: usize) -> f64 {
        CI_MULTIPLIER * self.v[k].stderr()
    }
    /// Index of the final snapshot.
    pub fn last(&self) -> usize {
        self.times.len() - 1
    }
}

/// Fold replica outcomes in the given order into per-snapshot statistics.
pub fn aggregate(
    outcomes: &[ReplicaOutcome],
    times: &[f64],
    d_psi: f64,
) -> Result<EstimatorSeries> {
    if outcomes.len() < 2 {
        return Err(invalid(format!(
            "need at least two replicas, got {}",
            outcomes.len()
        )));
    }
    let mut u = vec![Moments::default(); times.len()];
    let mut v = vec![Moments::default(); times.len()];
    for o in outcomes {
        if o.displacement.len() != times.len() || o.xi.len() != times.len() {
            return Err(invalid(
                "replica outcome length does not match snapshot times",
            ));
        }
        for (k, &t) in times.iter().enumerate() {
            u[k].push(u_of_t(o.displacement[k], t)?);
            v[k].push(v_of_t(o.displacement[k], o.xi[k], t, d_psi)?);
        }
    }
    Ok(EstimatorSeries {
        times: times.to_vec(),
        u,
        v,
        replicas: outcomes.len(),
        d_psi,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn spot_values() {
        assert_eq!(u_of_t(3.0, 4.5).unwrap(), 1.0);
        assert_eq!(u_of_t(0.0, 1.0).unwrap(), 0.0);
        assert!(u_of_t(1.0, 0.0).is_err());
        assert_eq!(
            v_of_t(2.0, 0.0, 3.0, 0.0).unwrap(),
            u_of_t(2.0, 3.0).unwrap()
        );
        assert_eq!(v_of_t(1.7, 1.7, 3.0, 0.25).unwrap(), 0.25);
    }

    #[test]
    fn two_point_statistics() {
        let m: Moments = [1.0, 3.0].into_iter().collect();
        assert_eq!(m.mean, 2.0);
        assert!((m.std() - 2f64.sqrt()).abs() < 1e-15);
        let c: Moments = [0.7; 10].into_iter().collect();
        assert!(c.std() < 1e-15);
    }

    #[test]
    fn aggregate_requires_two_replicas() {
        let o = ReplicaOutcome {
            displacement: vec![1.0],
            xi: vec![0.0],
        };
        assert!(aggregate(std::slice::from_ref(&o), &[1.0], 0.0).is_err());
        let s = aggregate(&[o.clone(), o], &[1.0], 0.0).unwrap();
        assert_eq!(s.mean_u(0), 0.5);
        assert_eq!(s.mean_v(0), 0.5);
        assert_eq!(s.std_u(0), 0.0);
    }

    proptest! {
        #[test]
        fn v_minus_u_identity(x in -50.0f64..50.0, xi in -50.0f64..50.0, t in 0.1f64..100.0, d in 0.0f64..5.0) {
            let lhs = v_of_t(x, xi, t, d).unwrap() - u_of_t(x, t).unwrap();
            let rhs = d - xi * xi / (2.0 * t);
            prop_assert!((lhs - rhs).abs() <= 1e-12 * (1.0 + x * x / t + xi * xi / t));
        }

        #[test]
        fn merge_matches_sequential(xs in prop::collection::vec(-10.0f64..10.0, 2..60), split in 0usize..60) {
            let split = split.min(xs.len());
            let all: Moments = xs.iter().copied().collect();
            let a: Moments = xs[..split].iter().copied().collect();
            let b: Moments = xs[split..].iter().copied().collect();
            let m = a.merge(&b);
            prop_assert_eq!(m.count, all.count);
            prop_assert!((m.mean - all.mean).abs() < 1e-12);
            prop_assert!((m.variance() - all.variance()).abs() < 1e-10);
        }
    }
}
