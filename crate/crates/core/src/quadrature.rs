//! Quadrature rules and Hermite function evaluation.

use std::f64::consts::PI;

/// Gauss-Legendre nodes and weights on `[a, b]`, nodes ascending.
pub fn gauss_legendre(n: usize, a: f64, b: f64) -> (Vec<f64>, Vec<f64>) {
    assert!(n >= 1, "need at least one node");
    let mut x = vec![0.0; n];
    let mut w = vec![0.0; n];
    let mid = 0.5 * (a + b);
    let half = 0.5 * (b - a);
    let m = n.div_ceil(2);
    for i in 0..m {
        let mut z = (PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
        let mut dp = 1.0;
        for _ in 0..100 {
            let (p, d) = legendre_with_derivative(n, z);
            dp = d;
            let dz = p / d;
            z -= dz;
            if dz.abs() < 1e-15 {
                break;
            }
        }
        let (_, d) = legendre_with_derivative(n, z);
        if d.is_finite() {
            dp = d;
        }
        let weight = 2.0 / ((1.0 - z * z) * dp * dp);
        x[i] = mid - half * z;
        x[n - 1 - i] = mid + half * z;
        w[i] = half * weight;
        w[n - 1 - i] = half * weight;
    }
    (x, w)
}

fn legendre_with_derivative(n: usize, z: f64) -> (f64, f64) {
    let mut p0 = 1.0;
    let mut p1 = z;
    if n == 0 {
        return (1.0, 0.0);
    }
    for j in 2..=n {
        let jf = j as f64;
        let p2 = ((2.0 * jf - 1.0) * z * p1 - (jf - 1.0) * p0) / jf;
        p0 = p1;
        p1 = p2;
    }
    let d = n as f64 * (z * p1 - p0) / (z * z - 1.0);
    (p1, d)
}

/// Uniform periodic trapezoid rule on `[-pi, pi)`: nodes and the common weight.
pub fn periodic_trapezoid(n: usize) -> (Vec<f64>, f64) {
    let h = 2.0 * PI / n as f64;
    ((0..n).map(|i| -PI + h * i as f64).collect(), h)
}

/// Orthonormal Hermite functions `psi_j(x) = (2 pi)^{-1/4} He_j(x) e^{-x^2/4} / sqrt(j!)`
/// for `j < n`, each multiplied by `exp(log_factor)`.
///
/// The recurrence runs on rescaled mantissas so that large `|x|` and large
/// `n` neither underflow nor overflow before the final scaling.
pub fn hermite_functions(x: f64, n: usize, log_factor: f64) -> Vec<f64> {
    let mut out = vec![0.0; n];
    hermite_functions_into(x, log_factor, &mut out);
    out
}

/// In-place variant of [`hermite_functions`]; fills the whole slice.
pub fn hermite_functions_into(x: f64, log_factor: f64, out: &mut [f64]) {
    let n = out.len();
    if n == 0 {
        return;
    }
    let mut log_scale = -0.25 * x * x + log_factor - 0.25 * (2.0 * PI).ln();
    let mut prev = 0.0;
    let mut cur = 1.0;
    for (j, slot) in out.iter_mut().enumerate() {
        *slot = scaled(cur, log_scale);
        let jf = j as f64;
        let next = (x * cur - jf.sqrt() * prev) / (jf + 1.0).sqrt();
        prev = cur;
        cur = next;
        if cur.abs() > 1e100 {
            cur *= 1e-100;
            prev *= 1e-100;
            log_scale += 100.0 * std::f64::consts::LN_10;
        }
    }
}

#[inline]
fn scaled(mantissa: f64, log_scale: f64) -> f64 {
    if mantissa == 0.0 {
        0.0
    } else {
        mantissa.signum() * (mantissa.abs().ln() + log_scale).exp()
    }
}

/// Gauss-Hermite rule for integrals `\int f(x) dx` over the real line where
/// `f` decays like `e^{-x^2/2}` times a polynomial.
///
/// Returns nodes in the probabilists' scaling (`x = sqrt(2) z` with `z` the
/// physicists' nodes) and function weights `1 / sum_{j<n} psi_j(x_k)^2`, so
/// that `sum_k w_k psi_i(x_k) psi_j(x_k) = delta_ij` for `i + j < 2n`.
pub fn gauss_hermite_functions(n: usize) -> (Vec<f64>, Vec<f64>) {
    assert!(n >= 1, "need at least one node");
    let z = physicists_hermite_roots(n);
    let mut nodes = Vec::with_capacity(n);
    let mut weights = Vec::with_capacity(n);
    for &zk in &z {
        let x = std::f64::consts::SQRT_2 * zk;
        nodes.push(x);
        weights.push(inverse_christoffel(x, n));
    }
    (nodes, weights)
}

/// `1 / sum_{j<n} psi_j(x)^2`, computed in log space.
fn inverse_christoffel(x: f64, n: usize) -> f64 {
    let mut log_scale = -0.25 * x * x - 0.25 * (2.0 * PI).ln();
    let mut prev = 0.0;
    let mut cur = 1.0;
    let mut sum = 0.0;
    for j in 0..n {
        sum += cur * cur;
        let jf = j as f64;
        let next = (x * cur - jf.sqrt() * prev) / (jf + 1.0).sqrt();
        prev = cur;
        cur = next;
        if cur.abs() > 1e100 {
            cur *= 1e-100;
            prev *= 1e-100;
            sum *= 1e-200;
            log_scale += 100.0 * std::f64::consts::LN_10;
        }
    }
    (-2.0 * log_scale - sum.ln()).exp()
}

/// Ratio `H_n(z) / H_n'(z)` for the physicists' polynomial, via the
/// normalised recurrence with rescaling.
fn newton_ratio(n: usize, z: f64) -> f64 {
    let mut prev = 0.0;
    let mut cur = PI.powf(-0.25);
    for j in 1..=n {
        let jf = j as f64;
        let next = z * (2.0 / jf).sqrt() * cur - ((jf - 1.0) / jf).sqrt() * prev;
        prev = cur;
        cur = next;
        if cur.abs() > 1e100 {
            cur *= 1e-100;
            prev *= 1e-100;
        }
    }
    cur / ((2.0 * n as f64).sqrt() * prev)
}

fn physicists_hermite_roots(n: usize) -> Vec<f64> {
    let nf = n as f64;
    let m = n.div_ceil(2);
    let mut desc = vec![0.0; n];
    let mut z = 0.0;
    for i in 0..m {
        z = match i {
            0 => (2.0 * nf + 1.0).sqrt() - 1.85575 * (2.0 * nf + 1.0).powf(-0.16667),
            1 => z - 1.14 * nf.powf(0.426) / z,
            2 => 1.86 * z - 0.86 * desc[0],
            3 => 1.91 * z - 0.91 * desc[1],
            _ => 2.0 * z - desc[i - 2],
        };
        for _ in 0..200 {
            let dz = newton_ratio(n, z);
            z -= dz;
            if dz.abs() <= 1e-15 * z.abs().max(1.0) {
                break;
            }
        }
        desc[i] = z;
        desc[n - 1 - i] = -z;
    }
    if n % 2 == 1 {
        desc[m - 1] = 0.0;
    }
    let ok = desc.windows(2).all(|w| w[0] > w[1]) && desc.iter().all(|v| v.is_finite());
    let mut roots = if ok { desc } else { golub_welsch_roots(n) };
    roots.sort_by(|a, b| a.partial_cmp(b).unwrap());
    roots
}

/// Fallback: eigenvalues of the Jacobi matrix, polished by Newton.
fn golub_welsch_roots(n: usize) -> Vec<f64> {
    use faer::Mat;
    let jac = Mat::<f64>::from_fn(n, n, |i, j| {
        if i + 1 == j || j + 1 == i {
            (i.max(j) as f64 / 2.0).sqrt()
        } else {
            0.0
        }
    });
    let eig = jac
        .self_adjoint_eigen(faer::Side::Lower)
        .expect("symmetric tridiagonal eigenproblem");
    let s = eig.S();
    (0..n)
        .map(|i| {
            let mut z = s[i];
            for _ in 0..5 {
                z -= newton_ratio(n, z);
            }
            z
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn legendre_integrates_polynomials() {
        let (x, w) = gauss_legendre(51, 0.0, 2.0);
        for k in 0..100 {
            let exact = 2f64.powi(k + 1) / (k + 1) as f64;
            let got: f64 = x.iter().zip(&w).map(|(x, w)| w * x.powi(k)).sum();
            assert!((got - exact).abs() < 1e-12 * exact, "k={k}");
        }
        let (x, w) = gauss_legendre(5, -1.0, 1.0);
        assert!((x[2]).abs() < 1e-15);
        assert!((w[2] - 128.0 / 225.0).abs() < 1e-14);
    }

    #[test]
    fn hermite_small_rule_matches_table() {
        // physicists' 3-point rule: nodes 0, +-sqrt(3/2)
        let (x, w) = gauss_hermite_functions(3);
        assert!((x[2] - 3f64.sqrt()).abs() < 1e-14);
        assert!(x[1].abs() < 1e-15);
        // sum_k w_k e^{-x_k^2/2} equals sqrt(2 pi)
        let s: f64 = x
            .iter()
            .zip(&w)
            .map(|(x, w)| w * (-0.5 * x * x).exp())
            .sum();
        assert!((s - (2.0 * PI).sqrt()).abs() < 1e-13);
    }

    #[test]
    fn hermite_rule_is_discretely_orthonormal() {
        for &n in &[20usize, 136, 616] {
            let (x, w) = gauss_hermite_functions(n);
            assert!(x.windows(2).all(|p| p[0] < p[1]));
            let m = n / 2;
            let vals: Vec<Vec<f64>> = x.iter().map(|&xk| hermite_functions(xk, m, 0.0)).collect();
            for i in (0..m).step_by(7) {
                for j in (0..m).step_by(5) {
                    let s: f64 = (0..n).map(|k| w[k] * vals[k][i] * vals[k][j]).sum();
                    let e = if i == j { 1.0 } else { 0.0 };
                    assert!((s - e).abs() < 1e-10, "n={n} i={i} j={j} s={s}");
                }
            }
        }
    }

    #[test]
    fn golub_welsch_agrees_with_newton() {
        let a = physicists_hermite_roots(40);
        let mut b = golub_welsch_roots(40);
        b.sort_by(|a, b| a.partial_cmp(b).unwrap());
        for (x, y) in a.iter().zip(&b) {
            assert!((x - y).abs() < 1e-12);
        }
    }

    #[test]
    fn hermite_functions_match_closed_forms() {
        let x = 1.3;
        let v = hermite_functions(x, 4, 0.0);
        let g = (2.0 * PI).powf(-0.25) * (-x * x / 4.0).exp();
        assert!((v[0] - g).abs() < 1e-15);
        assert!((v[1] - g * x).abs() < 1e-15);
        assert!((v[2] - g * (x * x - 1.0) / 2f64.sqrt()).abs() < 1e-15);
        assert!((v[3] - g * (x.powi(3) - 3.0 * x) / 6f64.sqrt()).abs() < 1e-15);
        // far tail stays finite and tiny instead of producing NaN
        let far = hermite_functions(60.0, 300, 0.0);
        assert!(far.iter().all(|v| v.is_finite()));
        // log factor cancels the Gaussian envelope
        let lifted = hermite_functions(60.0, 3, 900.0);
        assert!((lifted[0] - (2.0 * PI).powf(-0.25)).abs() < 1e-12);
    }
}
