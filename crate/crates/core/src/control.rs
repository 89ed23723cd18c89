//! Control variates: approximations `psi` of the Poisson solution together
//! with their momentum gradients and the constant `d[psi]`.

/// A control variate for the Langevin dynamics in dimension `D`.
pub trait ControlVariate<const D: usize>: Send + Sync {
    /// Set when `psi` is identically zero so runners can skip all work.
    const IS_ZERO: bool = false;

    fn value(&self, q: &[f64; D], p: &[f64; D]) -> f64;
    fn grad_p(&self, q: &[f64; D], p: &[f64; D]) -> [f64; D];
    /// `gamma / beta * E_mu |grad_p psi|^2`.
    fn d_psi(&self) -> f64;
    /// Short label written to outputs.
    fn source(&self) -> &str;
}

/// `psi = 0`.
#[derive(Clone, Copy, Debug, Default)]
pub struct NoControl;

impl<const D: usize> ControlVariate<D> for NoControl {
    const IS_ZERO: bool = true;

    fn value(&self, _: &[f64; D], _: &[f64; D]) -> f64 {
        0.0
    }
    fn grad_p(&self, _: &[f64; D], _: &[f64; D]) -> [f64; D] {
        [0.0; D]
    }
    fn d_psi(&self) -> f64 {
        0.0
    }
    fn source(&self) -> &str {
        "none"
    }
}

/// `psi = p_axis / gamma`, the exact solution when the potential vanishes.
#[derive(Clone, Copy, Debug)]
pub struct LinearMomentum {
    pub gamma: f64,
    pub beta: f64,
    pub axis: usize,
}

impl<const D: usize> ControlVariate<D> for LinearMomentum {
    #[inline]
    fn value(&self, _: &[f64; D], p: &[f64; D]) -> f64 {
        p[self.axis] / self.gamma
    }
    #[inline]
    fn grad_p(&self, _: &[f64; D], _: &[f64; D]) -> [f64; D] {
        let mut g = [0.0; D];
        g[self.axis] = 1.0 / self.gamma;
        g
    }
    fn d_psi(&self) -> f64 {
        1.0 / (self.gamma * self.beta)
    }
    fn source(&self) -> &str {
        "linear"
    }
}

/// Control variate for the generalized dynamics; the estimator uses the
/// derivative in the auxiliary variable `z`.
pub trait GleControlVariate: Send + Sync {
    const IS_ZERO: bool = false;

    fn value(&self, q: f64, p: f64, z: f64) -> f64;
    fn grad_z(&self, q: f64, p: f64, z: f64) -> f64;
    /// `beta^{-1} / nu^2 * E |d_z psi|^2`.
    fn d_psi(&self) -> f64;
    fn source(&self) -> &str;
}

impl GleControlVariate for NoControl {
    const IS_ZERO: bool = true;

    fn value(&self, _: f64, _: f64, _: f64) -> f64 {
        0.0
    }
    fn grad_z(&self, _: f64, _: f64, _: f64) -> f64 {
        0.0
    }
    fn d_psi(&self) -> f64 {
        0.0
    }
    fn source(&self) -> &str {
        "none"
    }
}
