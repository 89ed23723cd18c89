use std::f64::consts::PI;
use std::sync::Arc;

use super::{GridCV, D_QUADRATURE_NODES};
use crate::control::ControlVariate;
use crate::error::{invalid, Result};
use crate::potential::{Potential, TWO_PI};

/// Two-dimensional control variate `psi(q, p) = psi_1d(q_a, p_a)` built from
/// a one-dimensional grid along axis `a`.
#[derive(Clone, Debug)]
pub struct TensorizedCV {
    base: Arc<GridCV>,
    axis: usize,
    d_psi: f64,
}

impl TensorizedCV {
    /// `d[psi]` is recomputed under the Boltzmann measure of `potential`.
    pub fn new<P: Potential<2>>(
        base: Arc<GridCV>,
        axis: usize,
        potential: &P,
        gamma: f64,
        beta: f64,
    ) -> Result<Self> {
        if axis > 1 {
            return Err(invalid(format!("axis must be 0 or 1, got {axis}")));
        }
        let other = 1 - axis;
        let h = TWO_PI / D_QUADRATURE_NODES as f64;
        // marginal Boltzmann weight of the active coordinate
        let marginal = |x: f64| {
            let mut q = [0.0; 2];
            q[axis] = x;
            let mut s = 0.0;
            for k in 0..D_QUADRATURE_NODES {
                q[other] = -PI + h * k as f64;
                s += (-beta * potential.value(&q)).exp();
            }
            s * h
        };
        let d_psi = base.compute_d_with(marginal, gamma, beta);
        Ok(Self { base, axis, d_psi })
    }

    pub fn base(&self) -> &GridCV {
        &self.base
    }

    pub fn axis(&self) -> usize {
        self.axis
    }
}

impl ControlVariate<2> for TensorizedCV {
    #[inline]
    fn value(&self, q: &[f64; 2], p: &[f64; 2]) -> f64 {
        self.base.psi_at(q[self.axis], p[self.axis])
    }
    #[inline]
    fn grad_p(&self, q: &[f64; 2], p: &[f64; 2]) -> [f64; 2] {
        let mut g = [0.0; 2];
        g[self.axis] = self.base.dpsi_at(q[self.axis], p[self.axis]);
        g
    }
    fn d_psi(&self) -> f64 {
        self.d_psi
    }
    fn source(&self) -> &str {
        "tensorized"
    }
}
