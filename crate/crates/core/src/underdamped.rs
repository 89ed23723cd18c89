//! Small-friction limit of the Poisson solution.
//!
//! Above the separatrix energy `E0 = max V` the limiting solution is
//! `phi0(q, p) = sign(p) Phi(H(q, p))` with
//! `Phi(E) = 2 pi int_{E0}^{E} dE' / S(E')` and the action-period integral
//! `S(E) = int sqrt(2 (E - V(q))) dq`. Below `E0` it vanishes.

use std::f64::consts::PI;

use crate::error::{ensure_positive, Error, Result};
use crate::grid::{tabulate, CvSource, GridCV, GridMeta};
use crate::potential::{scan_extremes, Potential, Potential1D};
use crate::quadrature::gauss_legendre;

/// Trapezoid nodes used for the period integral.
pub const PERIOD_NODES: usize = 2048;

const PROFILE_TOL: f64 = 1e-10;

/// Tabulated `Phi(E)` on adaptive nodes in `u = sqrt(E - E0)` with monotone
/// cubic Hermite interpolation between nodes.
#[derive(Clone, Debug)]
pub struct UnderdampedProfile {
    potential: Potential1D,
    e0: f64,
    e_max: f64,
    potential_samples: Vec<f64>,
    u: Vec<f64>,
    phi: Vec<f64>,
    slope: Vec<f64>,
}

fn period_integral(samples: &[f64], e: f64) -> f64 {
    let h = 2.0 * PI / samples.len() as f64;
    h * samples
        .iter()
        .map(|v| (2.0 * (e - v).max(0.0)).sqrt())
        .sum::<f64>()
}

/// `S(E)` for a periodic potential. Fails for `E <= E0`.
pub fn s_und(potential: &Potential1D, e: f64) -> Result<f64> {
    let (_, e0) = scan_extremes(potential, 4096);
    if !(e > e0) {
        return Err(Error::Domain(format!(
            "energy {e} is not above the separatrix {e0}"
        )));
    }
    let samples = sample_potential(potential);
    Ok(period_integral(&samples, e))
}

fn sample_potential(potential: &Potential1D) -> Vec<f64> {
    let h = 2.0 * PI / PERIOD_NODES as f64;
    (0..PERIOD_NODES)
        .map(|k| potential.eval(-PI + h * k as f64))
        .collect()
}

impl UnderdampedProfile {
    /// Integrate `Phi' = 2 pi / S` from `E0` up to `e_max`.
    pub fn build(potential: &Potential1D, e_max: f64) -> Result<Self> {
        if !potential.is_periodic() {
            return Err(Error::Domain(
                "the small-friction profile needs a periodic potential".into(),
            ));
        }
        let samples = sample_potential(potential);
        let e0 = samples
            .iter()
            .copied()
            .fold(f64::NEG_INFINITY, f64::max)
            .max(scan_extremes(potential, 4096).1);
        if !(e_max > e0) {
            return Err(Error::Domain(format!(
                "E_max = {e_max} must exceed E0 = {e0}"
            )));
        }
        let du_phi = |u: f64| {
            if u == 0.0 {
                let s = period_integral(&samples, e0);
                // S(E0) vanishes only when V is constant; then Phi = sqrt(2E)
                return if s > 0.0 { 0.0 } else { 2f64.sqrt() };
            }
            4.0 * PI * u / period_integral(&samples, e0 + u * u)
        };
        let u_max = (e_max - e0).sqrt();
        let (gx, gw) = gauss_legendre(10, 0.0, 1.0);
        let gl = |a: f64, b: f64| -> f64 {
            gx.iter()
                .zip(&gw)
                .map(|(x, w)| w * du_phi(a + (b - a) * x))
                .sum::<f64>()
                * (b - a)
        };

        let mut u = vec![0.0];
        let mut phi = vec![0.0];
        let mut slope = vec![du_phi(0.0)];
        // left-to-right adaptive bisection; pending intervals kept on a stack
        let initial = 64;
        let mut stack: Vec<(f64, f64, u32)> = (0..initial)
            .rev()
            .map(|k| {
                (
                    u_max * k as f64 / initial as f64,
                    u_max * (k + 1) as f64 / initial as f64,
                    0,
                )
            })
            .collect();
        while let Some((a, b, depth)) = stack.pop() {
            let m = 0.5 * (a + b);
            let left = gl(a, m);
            let right = gl(m, b);
            let whole = gl(a, b);
            let pa = *phi.last().unwrap();
            let (sa, sb) = (*slope.last().unwrap(), du_phi(b));
            let pb = pa + left + right;
            let hermite_mid = 0.5 * (pa + pb) + 0.125 * (b - a) * (sa - sb);
            let tol = PROFILE_TOL * pb.abs().max(1.0);
            let accurate =
                (whole - left - right).abs() <= tol && (hermite_mid - (pa + left)).abs() <= tol;
            if accurate || depth >= 50 || b - a < 1e-14 {
                if !accurate {
                    return Err(Error::Domain(format!(
                        "profile tolerance not met near u = {a}"
                    )));
                }
                u.push(b);
                phi.push(pb);
                slope.push(sb);
            } else {
                stack.push((m, b, depth + 1));
                stack.push((a, m, depth + 1));
            }
        }
        let slope = fritsch_carlson(&u, &phi, slope);
        Ok(Self {
            potential: *potential,
            e0,
            e_max,
            potential_samples: samples,
            u,
            phi,
            slope,
        })
    }

    /// Build with the default upper energy `100 beta`, raised above `E0` if
    /// necessary.
    pub fn build_default(potential: &Potential1D, beta: f64) -> Result<Self> {
        ensure_positive("beta", beta)?;
        let (_, vmax) = scan_extremes(potential, 4096);
        Self::build(potential, (100.0 * beta).max(vmax + 50.0))
    }

    pub fn separatrix_energy(&self) -> f64 {
        self.e0
    }

    pub fn max_energy(&self) -> f64 {
        self.e_max
    }

    pub fn node_count(&self) -> usize {
        self.u.len()
    }

    pub fn potential(&self) -> &Potential1D {
        &self.potential
    }

    /// `S(E)` with the profile's quadrature.
    pub fn s_und(&self, e: f64) -> Result<f64> {
        if !(e > self.e0) {
            return Err(Error::Domain(format!(
                "energy {e} is not above the separatrix {}",
                self.e0
            )));
        }
        Ok(period_integral(&self.potential_samples, e))
    }

    /// `Phi(E)`; zero at and below `E0`, free-flight continuation above `E_max`.
    pub fn phi(&self, e: f64) -> f64 {
        if e <= self.e0 {
            return 0.0;
        }
        if e >= self.e_max {
            return *self.phi.last().unwrap() + (2.0 * e).sqrt() - (2.0 * self.e_max).sqrt();
        }
        let x = (e - self.e0).sqrt();
        let k = match self.u.partition_point(|&v| v <= x) {
            0 => 0,
            k if k >= self.u.len() => self.u.len() - 2,
            k => k - 1,
        };
        let h = self.u[k + 1] - self.u[k];
        let t = (x - self.u[k]) / h;
        let (t2, t3) = (t * t, t * t * t);
        (2.0 * t3 - 3.0 * t2 + 1.0) * self.phi[k]
            + (t3 - 2.0 * t2 + t) * h * self.slope[k]
            + (-2.0 * t3 + 3.0 * t2) * self.phi[k + 1]
            + (t3 - t2) * h * self.slope[k + 1]
    }

    /// `(phi0, d_p phi0)` at a phase-space point.
    pub fn eval_phi0(&self, q: f64, p: f64) -> (f64, f64) {
        let h = self.potential.eval(q) + 0.5 * p * p;
        if h <= self.e0 {
            return (0.0, 0.0);
        }
        let sign = if p > 0.0 {
            1.0
        } else if p < 0.0 {
            -1.0
        } else {
            0.0
        };
        let dp = if h >= self.e_max {
            p.abs() / (2.0 * h).sqrt()
        } else {
            2.0 * PI * p.abs() / period_integral(&self.potential_samples, h)
        };
        (sign * self.phi(h), dp)
    }

    /// `beta^{-1} E_mu |d_p phi0|^2 = 8 pi^2 / (beta Z) int_{E0}^inf e^{-beta E} / S(E) dE`.
    pub fn limiting_diffusion(&self, beta: f64) -> Result<f64> {
        ensure_positive("beta", beta)?;
        let samples = &self.potential_samples;
        let vmin = samples.iter().copied().fold(f64::INFINITY, f64::min);
        // positions: Z = sqrt(2 pi / beta) int e^{-beta V} dq, shifted by vmin
        let h = 2.0 * PI / samples.len() as f64;
        let zq: f64 = h * samples
            .iter()
            .map(|v| (-beta * (v - vmin)).exp())
            .sum::<f64>();
        let z = (2.0 * PI / beta).sqrt() * zq;
        // energies in u = sqrt(E - E0), truncated where e^{-beta u^2} < 1e-40
        let u_max = (92.0 / beta).sqrt();
        let panels = 400;
        let (gx, gw) = gauss_legendre(12, 0.0, 1.0);
        let mut acc = 0.0;
        for k in 0..panels {
            let a = u_max * k as f64 / panels as f64;
            let w = u_max / panels as f64;
            for (x, wt) in gx.iter().zip(&gw) {
                let u = a + w * x;
                let e = self.e0 + u * u;
                acc += wt * w * 2.0 * u * (-beta * (e - vmin)).exp() / period_integral(samples, e);
            }
        }
        Ok(8.0 * PI * PI / (beta * z) * acc)
    }

    /// Tabulate `psi = phi0 / gamma` for the Monte Carlo estimator.
    pub fn to_grid(&self, nq: usize, np: usize, lp: f64, gamma: f64, beta: f64) -> Result<GridCV> {
        ensure_positive("gamma", gamma)?;
        let meta = GridMeta {
            beta,
            gamma,
            potential: self.potential.name(),
            source: CvSource::Underdamped,
        };
        tabulate(&self.potential, nq, np, lp, meta, |q, p| {
            let (v, d) = self.eval_phi0(q, p);
            (v / gamma, d / gamma)
        })
    }
}

/// Limit node slopes so the cubic Hermite interpolant stays monotone.
fn fritsch_carlson(x: &[f64], y: &[f64], mut m: Vec<f64>) -> Vec<f64> {
    for k in 0..x.len() - 1 {
        let delta = (y[k + 1] - y[k]) / (x[k + 1] - x[k]);
        if delta <= 0.0 {
            m[k] = 0.0;
            m[k + 1] = 0.0;
            continue;
        }
        let a = m[k] / delta;
        let b = m[k + 1] / delta;
        let r = a * a + b * b;
        if r > 9.0 {
            let tau = 3.0 / r.sqrt();
            m[k] = tau * a * delta;
            m[k + 1] = tau * b * delta;
        }
    }
    m
}
