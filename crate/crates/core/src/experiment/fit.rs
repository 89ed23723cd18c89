//! Power-law fits of the diffusion coefficient against the friction.

use crate::error::{Error, Result};

/// Default upper bound on the friction values entering the fit.
pub const DEFAULT_CUTOFF: f64 = 1e-2;

/// Fit `D ~ C gamma^(-exponent)`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ScalingFit {
    pub exponent: f64,
    pub stderr: f64,
    /// `log C`
    pub intercept: f64,
    pub points: usize,
}

impl ScalingFit {
    pub fn predict(&self, gamma: f64) -> f64 {
        (self.intercept - self.exponent * gamma.ln()).exp()
    }
}

/// Least-squares slope of `log D` against `log gamma` over points with
/// `gamma <= cutoff`. Non-positive or non-finite `D` are skipped with a
/// warning. Needs three usable points.
pub fn fit_scaling(points: &[(f64, f64)], cutoff: f64) -> Result<ScalingFit> {
    let mut xs = Vec::new();
    let mut ys = Vec::new();
    for &(g, d) in points {
        if !(g > 0.0 && g <= cutoff) {
            continue;
        }
        if !(d.is_finite() && d > 0.0) {
            log::warn!("excluding gamma = {g} from the fit: D = {d}");
            continue;
        }
        xs.push(g.ln());
        ys.push(d.ln());
    }
    let n = xs.len();
    if n < 3 {
        return Err(Error::InvalidArgument(format!(
            "need at least 3 points with gamma <= {cutoff} and positive D, got {n}"
        )));
    }
    let nf = n as f64;
    let mx = xs.iter().sum::<f64>() / nf;
    let my = ys.iter().sum::<f64>() / nf;
    let sxx: f64 = xs.iter().map(|x| (x - mx).powi(2)).sum();
    if sxx == 0.0 {
        return Err(Error::InvalidArgument(
            "all fitted gamma values coincide".into(),
        ));
    }
    let sxy: f64 = xs.iter().zip(&ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    let slope = sxy / sxx;
    let intercept = my - slope * mx;
    let ssr: f64 = xs
        .iter()
        .zip(&ys)
        .map(|(x, y)| (y - intercept - slope * x).powi(2))
        .sum();
    let stderr = (ssr / (nf - 2.0) / sxx).sqrt();
    Ok(ScalingFit {
        exponent: -slope,
        stderr,
        intercept,
        points: n,
    })
}
