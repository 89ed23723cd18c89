//! Exact draws from the equilibrium measure `exp(-beta H)`.

use std::f64::consts::PI;

use rand::Rng;
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

use crate::error::{ensure_positive, invalid, Result};
use crate::potential::{scan_extremes, Potential};

/// Independent random stream for replica `replica` under `master_seed`.
pub fn replica_rng(master_seed: u64, replica: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(master_seed);
    rng.set_stream(replica);
    rng
}

#[derive(Clone, Copy, Debug)]
enum PositionLaw {
    /// Uniform proposals accepted with probability `exp(-beta (V - v_min))`.
    Rejection { v_min: f64 },
    /// Centered Gaussian with the given standard deviation per axis.
    Gaussian { std: f64 },
}

/// Sampler for positions, momenta and auxiliary variables at equilibrium.
#[derive(Clone, Debug)]
pub struct StationarySampler<P> {
    potential: P,
    beta: f64,
    momentum_std: f64,
    law: PositionLaw,
}

impl<P> StationarySampler<P> {
    pub fn new<const D: usize>(potential: P, beta: f64) -> Result<Self>
    where
        P: Potential<D>,
    {
        ensure_positive("beta", beta)?;
        let law = if let Some(k) = potential.harmonic_stiffness() {
            ensure_positive("stiffness", k)?;
            PositionLaw::Gaussian {
                std: 1.0 / (k * beta).sqrt(),
            }
        } else if potential.is_periodic() {
            let (v_min, _) = scan_extremes(&potential, 4096);
            PositionLaw::Rejection { v_min }
        } else {
            return Err(invalid("no exact sampler for this non-periodic potential"));
        };
        Ok(Self {
            potential,
            beta,
            momentum_std: 1.0 / beta.sqrt(),
            law,
        })
    }

    pub fn beta(&self) -> f64 {
        self.beta
    }

    pub fn potential(&self) -> &P {
        &self.potential
    }

    pub fn sample_position<R: Rng + ?Sized, const D: usize>(&self, rng: &mut R) -> [f64; D]
    where
        P: Potential<D>,
    {
        let mut q = [0.0; D];
        match self.law {
            PositionLaw::Gaussian { std } => {
                for qk in q.iter_mut() {
                    *qk = std * rng.sample::<f64, _>(StandardNormal);
                }
            }
            PositionLaw::Rejection { v_min } => loop {
                for qk in q.iter_mut() {
                    *qk = rng.random_range(-PI..PI);
                }
                let accept = (-self.beta * (self.potential.value(&q) - v_min)).exp();
                if rng.random::<f64>() < accept {
                    break;
                }
            },
        }
        q
    }

    pub fn sample_momentum<R: Rng + ?Sized, const D: usize>(&self, rng: &mut R) -> [f64; D] {
        let mut p = [0.0; D];
        for pk in p.iter_mut() {
            *pk = self.momentum_std * rng.sample::<f64, _>(StandardNormal);
        }
        p
    }

    /// Position and momentum from `exp(-beta H)`.
    pub fn sample_phase<R: Rng + ?Sized, const D: usize>(&self, rng: &mut R) -> ([f64; D], [f64; D])
    where
        P: Potential<D>,
    {
        let q = self.sample_position(rng);
        let p = self.sample_momentum(rng);
        (q, p)
    }

    /// Position, momentum and auxiliary variable from
    /// `exp(-beta (H + z^2/2))` in one dimension.
    pub fn sample_extended<R: Rng + ?Sized>(&self, rng: &mut R) -> (f64, f64, f64)
    where
        P: Potential<1>,
    {
        let [q] = self.sample_position(rng);
        let [p] = self.sample_momentum(rng);
        let z = self.momentum_std * rng.sample::<f64, _>(StandardNormal);
        (q, p, z)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::potential::{Potential1D, Potential2D};

    fn ks_uniformity(samples: &mut [f64], cdf: impl Fn(f64) -> f64) -> f64 {
        samples.sort_by(|a, b| a.partial_cmp(b).unwrap());
        let n = samples.len() as f64;
        samples
            .iter()
            .enumerate()
            .map(|(i, &x)| {
                let f = cdf(x);
                (f - i as f64 / n).abs().max(((i + 1) as f64 / n - f).abs())
            })
            .fold(0.0, f64::max)
    }

    #[test]
    fn cosine_positions_follow_boltzmann_cdf() {
        let beta = 2.0;
        let v = Potential1D::cosine();
        let sampler = StationarySampler::new(v, beta).unwrap();
        let mut rng = replica_rng(7, 0);
        let mut qs: Vec<f64> = (0..20_000)
            .map(|_| sampler.sample_position::<_, 1>(&mut rng)[0])
            .collect();
        // reference cdf by fine trapezoid
        let m = 20_000;
        let h = 2.0 * PI / m as f64;
        let dens: Vec<f64> = (0..=m)
            .map(|i| (-beta * v.eval(-PI + h * i as f64)).exp())
            .collect();
        let mut cum = vec![0.0; m + 1];
        for i in 1..=m {
            cum[i] = cum[i - 1] + 0.5 * h * (dens[i] + dens[i - 1]);
        }
        let z = cum[m];
        let cdf = |x: f64| {
            let t = (x + PI) / h;
            let i = (t.floor() as usize).min(m - 1);
            (cum[i] + (t - i as f64) * (cum[i + 1] - cum[i])) / z
        };
        let d = ks_uniformity(&mut qs, cdf);
        // 1% critical value is about 1.63 / sqrt(n)
        assert!(d < 1.63 / (20_000f64).sqrt(), "KS statistic {d}");
    }

    #[test]
    fn momenta_and_gaussian_positions_have_right_variance() {
        let sampler =
            StationarySampler::new(Potential1D::Quadratic { stiffness: 4.0 }, 0.5).unwrap();
        let mut rng = replica_rng(11, 3);
        let n = 100_000;
        let (mut sq, mut sp) = (0.0, 0.0);
        for _ in 0..n {
            let ([q], [p]) = sampler.sample_phase::<_, 1>(&mut rng);
            sq += q * q;
            sp += p * p;
        }
        // variance 1/(k beta) = 0.5, momentum 1/beta = 2; relative stderr ~ sqrt(2/n)
        assert!((sq / n as f64 / 0.5 - 1.0).abs() < 0.02);
        assert!((sp / n as f64 / 2.0 - 1.0).abs() < 0.02);
    }

    #[test]
    fn two_dimensional_rejection_is_symmetric() {
        let sampler =
            StationarySampler::new(Potential2D::CoupledCosine { delta: 0.25 }, 1.0).unwrap();
        let mut rng = replica_rng(1, 1);
        let n = 40_000;
        let (mut c1, mut c2) = (0.0, 0.0);
        for _ in 0..n {
            let q: [f64; 2] = sampler.sample_position(&mut rng);
            c1 += q[0].cos();
            c2 += q[1].cos();
        }
        assert!(((c1 - c2) / n as f64).abs() < 0.02);
        assert!(c1 / n as f64 > 0.2);
    }

    #[test]
    fn streams_are_reproducible_and_distinct() {
        let mut a = replica_rng(5, 2);
        let mut b = replica_rng(5, 2);
        let mut c = replica_rng(5, 3);
        let xa: u64 = a.random();
        assert_eq!(xa, b.random::<u64>());
        assert_ne!(xa, c.random::<u64>());
    }
}
