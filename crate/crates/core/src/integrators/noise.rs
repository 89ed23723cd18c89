use rand::Rng;
use rand_distr::StandardNormal;

use crate::error::{ensure_positive, Result};

/// Joint law of the Ornstein-Uhlenbeck noise `g` and the Brownian increment
/// `g_tilde` over one step of length `dt` at friction `gamma`.
///
/// The covariance is
/// `[[(1 - e^{-2a})/(2 gamma), (1 - e^{-a})/gamma], [., dt]]` with `a = gamma dt`.
#[derive(Clone, Copy, Debug)]
pub struct NoisePairCovariance {
    pub gamma: f64,
    pub dt: f64,
    pub s11: f64,
    pub s12: f64,
    pub s22: f64,
    /// Symmetric square root, row major `[r11, r12, r22]`.
    root: [f64; 3],
}

impl NoisePairCovariance {
    pub fn new(gamma: f64, dt: f64) -> Result<Self> {
        ensure_positive("gamma", gamma)?;
        ensure_positive("dt", dt)?;
        let a = gamma * dt;
        let y = -(-a).exp_m1();
        let s11 = -(-2.0 * a).exp_m1() / (2.0 * gamma);
        let s12 = y / gamma;
        let s22 = dt;
        let det = (y * cancellation_free_gap(a, y)).max(0.0) / (gamma * gamma);
        let sdet = det.sqrt();
        let t = (s11 + s22 + 2.0 * sdet).sqrt();
        let root = [(s11 + sdet) / t, s12 / t, (s22 + sdet) / t];
        Ok(Self {
            gamma,
            dt,
            s11,
            s12,
            s22,
            root,
        })
    }

    pub fn determinant(&self) -> f64 {
        let a = self.gamma * self.dt;
        let y = -(-a).exp_m1();
        y * cancellation_free_gap(a, y) / (self.gamma * self.gamma)
    }

    /// The symmetric square root as `[[r11, r12], [r12, r22]]`.
    pub fn sqrt_matrix(&self) -> [[f64; 2]; 2] {
        let [r11, r12, r22] = self.root;
        [[r11, r12], [r12, r22]]
    }

    /// Map two independent standard normals to `(g, g_tilde)`.
    #[inline]
    pub fn transform(&self, n1: f64, n2: f64) -> (f64, f64) {
        let [r11, r12, r22] = self.root;
        (r11 * n1 + r12 * n2, r12 * n1 + r22 * n2)
    }

    #[inline]
    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> (f64, f64) {
        let n1: f64 = rng.sample(StandardNormal);
        let n2: f64 = rng.sample(StandardNormal);
        self.transform(n1, n2)
    }
}

/// `a - y (1 + a/2)` with `y = 1 - e^{-a}`; uses the Taylor series for small
/// `a` where the direct form cancels catastrophically.
fn cancellation_free_gap(a: f64, y: f64) -> f64 {
    if a >= 0.1 {
        return a - y * (1.0 + 0.5 * a);
    }
    // sum_{k>=3} (-1)^k (1 - k/2) a^k / k!
    let mut term = a * a / 2.0; // a^k / k! at k = 2
    let mut sum = 0.0;
    for k in 3..=20 {
        term *= a / k as f64;
        let sign = if k % 2 == 0 { 1.0 } else { -1.0 };
        sum += sign * (1.0 - 0.5 * k as f64) * term;
    }
    sum
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::sampling::replica_rng;
    use proptest::prelude::*;

    #[test]
    fn reference_entries() {
        let s = NoisePairCovariance::new(1.0, 0.01).unwrap();
        assert!((s.s11 - 0.00990066).abs() < 5e-9);
        assert!((s.s12 - 0.00995017).abs() < 5e-9);
        assert_eq!(s.s22, 0.01);
    }

    #[test]
    fn series_and_direct_forms_agree_at_switch() {
        let a: f64 = 0.09;
        let y = -(-a).exp_m1();
        let direct = a - y * (1.0 + 0.5 * a);
        let series = cancellation_free_gap(a, y);
        assert!((direct - series).abs() < 1e-11 * series);
        // leading order a^3/12
        let tiny = 1e-4;
        let g = cancellation_free_gap(tiny, -(-tiny).exp_m1());
        assert!((g / (tiny.powi(3) / 12.0) - 1.0).abs() < 1e-3);
    }

    #[test]
    fn empirical_covariance_small_sample() {
        let s = NoisePairCovariance::new(0.5, 0.02).unwrap();
        let mut rng = replica_rng(3, 0);
        let n = 200_000;
        let (mut a, mut b, mut c) = (0.0, 0.0, 0.0);
        for _ in 0..n {
            let (g, gt) = s.sample(&mut rng);
            a += g * g;
            b += g * gt;
            c += gt * gt;
        }
        let n = n as f64;
        assert!((a / n / s.s11 - 1.0).abs() < 0.015);
        assert!((b / n / s.s12 - 1.0).abs() < 0.015);
        assert!((c / n / s.s22 - 1.0).abs() < 0.015);
    }

    proptest! {
        #[test]
        fn root_squares_back_and_is_positive_definite(lg in -4.0f64..2.0, ldt in -4.0f64..0.0) {
            let gamma = 10f64.powf(lg);
            let dt = 10f64.powf(ldt);
            let s = NoisePairCovariance::new(gamma, dt).unwrap();
            prop_assert!(s.determinant() > 0.0);
            prop_assert!(s.s11 > 0.0 && s.s22 > 0.0);
            let r = s.sqrt_matrix();
            let scale = s.s11.max(s.s22);
            let p11 = r[0][0] * r[0][0] + r[0][1] * r[1][0];
            let p12 = r[0][0] * r[0][1] + r[0][1] * r[1][1];
            let p22 = r[1][0] * r[0][1] + r[1][1] * r[1][1];
            prop_assert!((p11 - s.s11).abs() < 1e-12 * scale);
            prop_assert!((p12 - s.s12).abs() < 1e-12 * scale);
            prop_assert!((p22 - s.s22).abs() < 1e-12 * scale);
        }
    }
}
