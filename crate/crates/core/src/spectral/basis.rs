use std::f64::consts::PI;

use crate::error::{ensure_positive, invalid, Result};
use crate::quadrature::hermite_functions_into;

/// Truncation and scaling of the tensor basis. Indices run over `0..=n` in
/// each variable.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SpectralBasis {
    pub n: usize,
    /// Hermite scale in momentum units; `1/sqrt(beta)` makes `p` a single
    /// basis element.
    pub sigma: f64,
    pub beta: f64,
    pub gamma: f64,
}

impl SpectralBasis {
    pub fn new(n: usize, sigma: f64, beta: f64, gamma: f64) -> Result<Self> {
        if n < 2 {
            return Err(invalid(format!("need at least two modes, got n = {n}")));
        }
        ensure_positive("sigma", sigma)?;
        ensure_positive("beta", beta)?;
        ensure_positive("gamma", gamma)?;
        Ok(Self {
            n,
            sigma,
            beta,
            gamma,
        })
    }

    /// Functions per variable.
    pub fn size(&self) -> usize {
        self.n + 1
    }

    /// Number of Galerkin unknowns.
    pub fn unknowns(&self) -> usize {
        self.size() * self.size()
    }

    #[inline]
    pub fn index(&self, i: usize, j: usize) -> usize {
        i * self.size() + j
    }
}

/// Orthonormal trigonometric functions on `[-pi, pi)`:
/// `g_0 = (2 pi)^{-1/2}`, `g_{2m-1} = sin(m q)/sqrt(pi)`, `g_{2m} = cos(m q)/sqrt(pi)`.
pub fn trig_values(q: f64, out: &mut [f64]) {
    let c0 = (2.0 * PI).sqrt().recip();
    let c = PI.sqrt().recip();
    for (i, slot) in out.iter_mut().enumerate() {
        *slot = if i == 0 {
            c0
        } else if i % 2 == 1 {
            c * (i.div_ceil(2) as f64 * q).sin()
        } else {
            c * ((i / 2) as f64 * q).cos()
        };
    }
}

pub fn trig_derivatives(q: f64, out: &mut [f64]) {
    let c = PI.sqrt().recip();
    for (i, slot) in out.iter_mut().enumerate() {
        *slot = if i == 0 {
            0.0
        } else if i % 2 == 1 {
            let m = i.div_ceil(2) as f64;
            c * m * (m * q).cos()
        } else {
            let m = (i / 2) as f64;
            -c * m * (m * q).sin()
        };
    }
}

/// Values and `x`-derivatives of `e^{log_factor} psi_j(x)` for `j < vals.len()`,
/// where `log_factor = lift * x^2` for a caller-chosen `lift`.
/// `scratch` must hold `vals.len() + 1` entries.
pub fn hermite_with_derivative(
    x: f64,
    lift: f64,
    vals: &mut [f64],
    ders: &mut [f64],
    scratch: &mut [f64],
) {
    let n = vals.len();
    debug_assert!(scratch.len() > n && ders.len() == n);
    hermite_functions_into(x, lift * x * x, &mut scratch[..n + 1]);
    for j in 0..n {
        let down = if j > 0 {
            0.5 * (j as f64).sqrt() * scratch[j - 1]
        } else {
            0.0
        };
        let up = 0.5 * ((j + 1) as f64).sqrt() * scratch[j + 1];
        vals[j] = scratch[j];
        ders[j] = down - up + 2.0 * lift * x * scratch[j];
    }
}
