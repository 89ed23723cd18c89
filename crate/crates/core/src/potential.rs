//! Torus geometry and the potential registry.
//!
//! Positions live on `[-pi, pi)^D`. Integrators keep an unwrapped copy of the
//! position as well so the net displacement over a trajectory is available.

use std::f64::consts::PI;
use std::fmt;

use crate::error::{invalid, Result};

pub const TWO_PI: f64 = 2.0 * PI;

/// Map an angle to `[-pi, pi)`.
#[inline]
pub fn wrap_angle(q: f64) -> f64 {
    let r = (q + PI).rem_euclid(TWO_PI);
    // rem_euclid can round up to exactly 2*pi for tiny negative inputs
    if r >= TWO_PI {
        -PI
    } else {
        r - PI
    }
}

/// A potential energy on a `D`-dimensional position space.
pub trait Potential<const D: usize>: Send + Sync {
    fn value(&self, q: &[f64; D]) -> f64;
    fn gradient(&self, q: &[f64; D]) -> [f64; D];
    /// Whether the position space is the torus. Non-periodic potentials are
    /// only used for analytic checks on the real line.
    fn is_periodic(&self) -> bool {
        true
    }
    fn name(&self) -> String;
    /// Stiffness `k` when the potential is `k |q|^2 / 2` on the real line.
    fn harmonic_stiffness(&self) -> Option<f64> {
        None
    }
}

/// One-dimensional potentials.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum Potential1D {
    Zero,
    /// `offset - amplitude * cos(q)`
    Cosine {
        offset: f64,
        amplitude: f64,
    },
    /// `stiffness * q^2 / 2` on the real line.
    Quadratic {
        stiffness: f64,
    },
}

impl Potential1D {
    /// `-cos(q)/2`
    pub fn cosine() -> Self {
        Potential1D::Cosine {
            offset: 0.0,
            amplitude: 0.5,
        }
    }

    /// `(1 - cos(q))/2`
    pub fn pendulum() -> Self {
        Potential1D::Cosine {
            offset: 0.5,
            amplitude: 0.5,
        }
    }

    /// Evaluate `V(q)` for a scalar position.
    #[inline]
    pub fn eval(&self, q: f64) -> f64 {
        match *self {
            Potential1D::Zero => 0.0,
            Potential1D::Cosine { offset, amplitude } => offset - amplitude * q.cos(),
            Potential1D::Quadratic { stiffness } => 0.5 * stiffness * q * q,
        }
    }

    /// Evaluate `V'(q)`.
    #[inline]
    pub fn derivative(&self, q: f64) -> f64 {
        match *self {
            Potential1D::Zero => 0.0,
            Potential1D::Cosine { amplitude, .. } => amplitude * q.sin(),
            Potential1D::Quadratic { stiffness } => stiffness * q,
        }
    }
}

impl Potential<1> for Potential1D {
    #[inline]
    fn value(&self, q: &[f64; 1]) -> f64 {
        self.eval(q[0])
    }

    #[inline]
    fn gradient(&self, q: &[f64; 1]) -> [f64; 1] {
        [self.derivative(q[0])]
    }

    fn is_periodic(&self) -> bool {
        !matches!(self, Potential1D::Quadratic { .. })
    }

    fn name(&self) -> String {
        match *self {
            Potential1D::Zero => "zero".into(),
            Potential1D::Cosine { offset, amplitude } => {
                if offset == 0.0 && amplitude == 0.5 {
                    "cosine".into()
                } else if offset == 0.5 && amplitude == 0.5 {
                    "pendulum".into()
                } else {
                    format!("cosine(offset={offset},amplitude={amplitude})")
                }
            }
            Potential1D::Quadratic { stiffness } => format!("quadratic(k={stiffness})"),
        }
    }

    fn harmonic_stiffness(&self) -> Option<f64> {
        match *self {
            Potential1D::Quadratic { stiffness } => Some(stiffness),
            _ => None,
        }
    }
}

/// Two-dimensional potentials.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum Potential2D {
    Zero,
    /// `-(cos q1 + cos q2)/2 - delta cos q1 cos q2`
    CoupledCosine {
        delta: f64,
    },
}

impl Potential<2> for Potential2D {
    #[inline]
    fn value(&self, q: &[f64; 2]) -> f64 {
        match *self {
            Potential2D::Zero => 0.0,
            Potential2D::CoupledCosine { delta } => {
                let (c1, c2) = (q[0].cos(), q[1].cos());
                -0.5 * (c1 + c2) - delta * c1 * c2
            }
        }
    }

    #[inline]
    fn gradient(&self, q: &[f64; 2]) -> [f64; 2] {
        match *self {
            Potential2D::Zero => [0.0, 0.0],
            Potential2D::CoupledCosine { delta } => {
                let (s1, c1) = q[0].sin_cos();
                let (s2, c2) = q[1].sin_cos();
                [0.5 * s1 + delta * s1 * c2, 0.5 * s2 + delta * c1 * s2]
            }
        }
    }

    fn name(&self) -> String {
        match *self {
            Potential2D::Zero => "zero2d".into(),
            Potential2D::CoupledCosine { .. } => "cos2d".into(),
        }
    }
}

/// A potential selected by name from a configuration.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum PotentialChoice {
    One(Potential1D),
    Two(Potential2D),
}

impl PotentialChoice {
    /// Look up a registry name. `stiffness` is used by `quadratic`, `delta` by
    /// `cos2d`.
    pub fn from_name(name: &str, stiffness: f64, delta: f64) -> Result<Self> {
        Ok(match name {
            "zero" => PotentialChoice::One(Potential1D::Zero),
            "cosine" => PotentialChoice::One(Potential1D::cosine()),
            "pendulum" => PotentialChoice::One(Potential1D::pendulum()),
            "quadratic" => {
                if !(stiffness.is_finite() && stiffness > 0.0) {
                    return Err(invalid(format!(
                        "quadratic stiffness must be positive, got {stiffness}"
                    )));
                }
                PotentialChoice::One(Potential1D::Quadratic { stiffness })
            }
            "zero2d" => PotentialChoice::Two(Potential2D::Zero),
            "cos2d" => {
                if !delta.is_finite() {
                    return Err(invalid("delta must be finite"));
                }
                PotentialChoice::Two(Potential2D::CoupledCosine { delta })
            }
            other => return Err(invalid(format!("unknown potential '{other}'"))),
        })
    }

    pub fn dimension(&self) -> usize {
        match self {
            PotentialChoice::One(_) => 1,
            PotentialChoice::Two(_) => 2,
        }
    }

    pub fn name(&self) -> String {
        match self {
            PotentialChoice::One(p) => p.name(),
            PotentialChoice::Two(p) => p.name(),
        }
    }
}

impl fmt::Display for PotentialChoice {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.name())
    }
}

/// Minimum and maximum of a periodic potential, scanned on a uniform grid
/// with `nodes_per_dim` points along each axis.
pub fn scan_extremes<P: Potential<D>, const D: usize>(
    potential: &P,
    nodes_per_dim: usize,
) -> (f64, f64) {
    let h = TWO_PI / nodes_per_dim as f64;
    let total = nodes_per_dim.pow(D as u32);
    let mut lo = f64::INFINITY;
    let mut hi = f64::NEG_INFINITY;
    let mut q = [0.0; D];
    for flat in 0..total {
        let mut rem = flat;
        for qk in q.iter_mut() {
            *qk = -PI + h * (rem % nodes_per_dim) as f64;
            rem /= nodes_per_dim;
        }
        let v = potential.value(&q);
        lo = lo.min(v);
        hi = hi.max(v);
    }
    (lo, hi)
}

/// Hamiltonian `V(q) + |p|^2/2` at inverse temperature `beta`.
#[derive(Clone, Copy, Debug)]
pub struct Hamiltonian<P> {
    pub potential: P,
    pub beta: f64,
}

impl<P> Hamiltonian<P> {
    pub fn energy<const D: usize>(&self, q: &[f64; D], p: &[f64; D]) -> f64
    where
        P: Potential<D>,
    {
        self.potential.value(q) + 0.5 * p.iter().map(|x| x * x).sum::<f64>()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn wrap_boundaries() {
        assert_eq!(wrap_angle(PI), -PI);
        assert_eq!(wrap_angle(-PI), -PI);
        assert!(wrap_angle(-1e-300).abs() < 1e-15);
        assert!((wrap_angle(3.0 * PI + 0.5) - (-PI + 0.5)).abs() < 1e-12);
    }

    #[test]
    fn registry_names() {
        assert_eq!(
            PotentialChoice::from_name("cosine", 1.0, 0.0)
                .unwrap()
                .name(),
            "cosine"
        );
        assert_eq!(
            PotentialChoice::from_name("pendulum", 1.0, 0.0)
                .unwrap()
                .name(),
            "pendulum"
        );
        assert_eq!(
            PotentialChoice::from_name("cos2d", 1.0, 0.25)
                .unwrap()
                .dimension(),
            2
        );
        assert!(PotentialChoice::from_name("nope", 1.0, 0.0).is_err());
        assert!(PotentialChoice::from_name("quadratic", -1.0, 0.0).is_err());
    }

    #[test]
    fn extremes_of_cosine() {
        let (lo, hi) = scan_extremes(&Potential1D::cosine(), 4096);
        assert!((lo + 0.5).abs() < 1e-12);
        assert!((hi - 0.5).abs() < 1e-6);
        let (lo, hi) = scan_extremes(&Potential2D::CoupledCosine { delta: 0.25 }, 256);
        assert!((lo + 1.25).abs() < 1e-12);
        // maximum of -(c1+c2)/2 - c1 c2/4 over the square is at c1 = c2 = -1 or mixed signs
        assert!(hi > 0.7 && hi < 0.8);
    }

    fn numeric_grad<P: Potential<2>>(p: &P, q: [f64; 2]) -> [f64; 2] {
        let h = 1e-6;
        let mut g = [0.0; 2];
        for k in 0..2 {
            let mut a = q;
            let mut b = q;
            a[k] += h;
            b[k] -= h;
            g[k] = (p.value(&a) - p.value(&b)) / (2.0 * h);
        }
        g
    }

    proptest! {
        #[test]
        fn wrap_lands_in_range(q in -1e6f64..1e6) {
            let w = wrap_angle(q);
            prop_assert!((-PI..PI).contains(&w));
            let k = ((q - w) / TWO_PI).round();
            prop_assert!((q - w - k * TWO_PI).abs() < 1e-8 * (1.0 + q.abs()));
        }

        #[test]
        fn periodic_potentials_repeat(q in -10.0f64..10.0, q2 in -10.0f64..10.0, delta in -1.0f64..1.0) {
            for p in [Potential1D::Zero, Potential1D::cosine(), Potential1D::pendulum()] {
                prop_assert!((p.eval(q + TWO_PI) - p.eval(q)).abs() < 1e-12);
            }
            let p2 = Potential2D::CoupledCosine { delta };
            prop_assert!((p2.value(&[q + TWO_PI, q2]) - p2.value(&[q, q2])).abs() < 1e-12);
            prop_assert!((p2.value(&[q, q2 + TWO_PI]) - p2.value(&[q, q2])).abs() < 1e-12);
        }

        #[test]
        fn gradients_match_finite_differences(q in -4.0f64..4.0, q2 in -4.0f64..4.0, delta in -1.0f64..1.0) {
            for p in [Potential1D::cosine(), Potential1D::pendulum(), Potential1D::Quadratic { stiffness: 2.5 }] {
                let fd = (p.eval(q + 1e-6) - p.eval(q - 1e-6)) / 2e-6;
                prop_assert!((fd - p.derivative(q)).abs() < 1e-7);
            }
            let p2 = Potential2D::CoupledCosine { delta };
            let g = p2.gradient(&[q, q2]);
            let fd = numeric_grad(&p2, [q, q2]);
            prop_assert!((g[0] - fd[0]).abs() < 1e-7 && (g[1] - fd[1]).abs() < 1e-7);
        }
    }
}
