use std::f64::consts::PI;

use super::basis::{hermite_with_derivative, trig_derivatives, trig_values, SpectralBasis};
use super::sparse::Csr;
use crate::error::{Error, Result};
use crate::potential::{Potential, Potential1D};
use crate::quadrature::{gauss_hermite_functions, periodic_trapezoid};

/// One-dimensional factors of the Galerkin matrix and right-hand side.
///
/// The generator matrix is
/// `A = -QD (x) PX + QV (x) PD + gamma I (x) PF`
/// where `(x)` is the Kronecker product with the position index outermost.
#[derive(Clone, Debug)]
pub struct OperatorFactors {
    pub basis: SpectralBasis,
    /// `int g_k d_q g_i`
    pub qd: Vec<f64>,
    /// `int g_k V' g_i`
    pub qv: Vec<f64>,
    /// `int h_l p h_j`
    pub px: Vec<f64>,
    /// `int h_l d_p h_j`
    pub pd: Vec<f64>,
    /// `-int h_l (beta^{-1} d_p^2 - beta p^2/4 + 1/2) h_j`
    pub pf: Vec<f64>,
    /// `int e^{-beta V/2} g_i dq`
    pub a: Vec<f64>,
    /// `int p e^{-beta p^2/4} h_j dp`
    pub b: Vec<f64>,
    /// `int e^{-beta p^2/4} h_j dp`
    pub c: Vec<f64>,
    /// `int e^{-beta H} dq dp`
    pub partition: f64,
}

impl OperatorFactors {
    /// Coefficients of `p` in the basis: `Z^{-1/2} a_i b_j`.
    pub fn rhs(&self) -> Vec<f64> {
        let s = self.partition.sqrt().recip();
        let mut f = Vec::with_capacity(self.a.len() * self.b.len());
        for &ai in &self.a {
            for &bj in &self.b {
                f.push(s * ai * bj);
            }
        }
        f
    }

    /// Unit vector of the coefficients of the constant function.
    pub fn constraint(&self) -> Vec<f64> {
        let mut u = Vec::with_capacity(self.a.len() * self.c.len());
        for &ai in &self.a {
            for &cj in &self.c {
                u.push(ai * cj);
            }
        }
        let norm = u.iter().map(|x| x * x).sum::<f64>().sqrt();
        u.iter_mut().for_each(|x| *x /= norm);
        u
    }

    /// Sparse matrix `ham * (-L_ham) + fd * (-gamma L_FD)` in the basis.
    pub fn operator(&self, ham: f64, fd: f64) -> Csr {
        let m = self.basis.size();
        let tol = 1e-13;
        let prune = |v: &[f64]| -> Vec<f64> {
            let big = v.iter().fold(0.0f64, |a, x| a.max(x.abs()));
            v.iter()
                .map(|&x| if x.abs() <= tol * big { 0.0 } else { x })
                .collect()
        };
        let (qd, qv, px, pd, pf) = (
            prune(&self.qd),
            prune(&self.qv),
            prune(&self.px),
            prune(&self.pd),
            prune(&self.pf),
        );
        let gamma = self.basis.gamma;
        let mut rows: Vec<Vec<(usize, f64)>> = vec![Vec::new(); m * m];
        for k in 0..m {
            for i in 0..m {
                let (d, v) = (qd[k * m + i], qv[k * m + i]);
                if (d == 0.0 && v == 0.0) || ham == 0.0 {
                    continue;
                }
                for l in 0..m {
                    let row = &mut rows[k * m + l];
                    for j in 0..m {
                        let val = ham * (-d * px[l * m + j] + v * pd[l * m + j]);
                        if val != 0.0 {
                            row.push((i * m + j, val));
                        }
                    }
                }
            }
            if fd != 0.0 {
                for l in 0..m {
                    for j in 0..m {
                        let val = fd * gamma * pf[l * m + j];
                        if val != 0.0 {
                            rows[k * m + l].push((k * m + j, val));
                        }
                    }
                }
            }
        }
        Csr::from_rows(m * m, rows)
    }
}

/// Compute all one-dimensional factors by quadrature: periodic trapezoid
/// with `8 (n + 1)` nodes in `q`, Gauss-Hermite with `2 n + 16` nodes for
/// the momentum operator blocks, and a fine uniform rule for the momentum
/// moments `b` and `c`.
pub fn assemble_factors(basis: &SpectralBasis, potential: &Potential1D) -> Result<OperatorFactors> {
    if !potential.is_periodic() {
        return Err(Error::Config(
            "the spectral solver needs a periodic potential".into(),
        ));
    }
    let m = basis.size();
    let beta = basis.beta;
    let sigma = basis.sigma;

    // position factors
    let (nodes, w) = periodic_trapezoid(8 * m);
    let mut qd = vec![0.0; m * m];
    let mut qv = vec![0.0; m * m];
    let mut a = vec![0.0; m];
    let mut zq = 0.0;
    let (mut g, mut dg) = (vec![0.0; m], vec![0.0; m]);
    for &q in &nodes {
        trig_values(q, &mut g);
        trig_derivatives(q, &mut dg);
        let vp = potential.derivative(q);
        let v = potential.eval(q);
        let half = (-0.5 * beta * v).exp();
        zq += w * half * half;
        for k in 0..m {
            a[k] += w * half * g[k];
            let gk = w * g[k];
            for i in 0..m {
                qd[k * m + i] += gk * dg[i];
                qv[k * m + i] += gk * vp * g[i];
            }
        }
    }

    // momentum operator blocks, in x = p / sigma
    let (x, lam) = gauss_hermite_functions(2 * basis.n + 16);
    let mut px = vec![0.0; m * m];
    let mut pd = vec![0.0; m * m];
    let mut pf = vec![0.0; m * m];
    let (mut h, mut dh, mut scratch) = (vec![0.0; m], vec![0.0; m], vec![0.0; m + 1]);
    let bs2 = beta * sigma * sigma;
    for (&xk, &lk) in x.iter().zip(&lam) {
        hermite_with_derivative(xk, 0.0, &mut h, &mut dh, &mut scratch);
        let pot = bs2 * xk * xk / 4.0 - 0.5;
        for l in 0..m {
            let hl = lk * h[l];
            let dl = lk * dh[l];
            for j in 0..m {
                px[l * m + j] += sigma * hl * xk * h[j];
                pd[l * m + j] += hl * dh[j] / sigma;
                pf[l * m + j] += dl * dh[j] / (bs2) + hl * pot * h[j];
            }
        }
    }

    // momentum moments on a wide uniform grid
    let half_width = 2.0 * (m as f64).sqrt() + 40.0;
    let step = 0.02;
    let count = (2.0 * half_width / step).ceil() as usize;
    let mut b = vec![0.0; m];
    let mut c = vec![0.0; m];
    for k in 0..=count {
        let xk = -half_width + step * k as f64;
        // e^{-beta sigma^2 x^2 / 4} psi_j(x)
        crate::quadrature::hermite_functions_into(xk, -bs2 * xk * xk / 4.0, &mut h);
        for j in 0..m {
            c[j] += step * h[j];
            b[j] += step * xk * h[j];
        }
    }
    for j in 0..m {
        c[j] *= sigma.sqrt();
        b[j] *= sigma.powf(1.5);
    }

    let partition = (2.0 * PI / beta).sqrt() * zq;
    let factors = OperatorFactors {
        basis: *basis,
        qd,
        qv,
        px,
        pd,
        pf,
        a,
        b,
        c,
        partition,
    };
    check_orthonormality(&factors, &x, &lam)?;
    Ok(factors)
}

/// The Hermite quadrature must resolve the basis; a failure here means the
/// configuration asks for more modes than the rule can integrate.
fn check_orthonormality(f: &OperatorFactors, x: &[f64], lam: &[f64]) -> Result<()> {
    let m = f.basis.size();
    let (mut h, mut dh, mut s) = (vec![0.0; m], vec![0.0; m], vec![0.0; m + 1]);
    let mut worst: f64 = 0.0;
    let check = [0, 1, m / 2, m - 1];
    let mut gram = [[0.0; 4]; 4];
    for (&xk, &lk) in x.iter().zip(lam) {
        hermite_with_derivative(xk, 0.0, &mut h, &mut dh, &mut s);
        for (r, &a) in check.iter().enumerate() {
            for (t, &b) in check.iter().enumerate() {
                gram[r][t] += lk * h[a] * h[b];
            }
        }
    }
    for (r, &a) in check.iter().enumerate() {
        for (t, &b) in check.iter().enumerate() {
            let e = if a == b { 1.0 } else { 0.0 };
            worst = worst.max((gram[r][t] - e).abs());
        }
    }
    if worst > 1e-8 || !f.partition.is_finite() {
        return Err(Error::Config(format!(
            "Hermite quadrature not converged (orthonormality error {worst:e})"
        )));
    }
    Ok(())
}

/// Assemble the sparse matrix of `-L` in the basis.
pub fn assemble_generator_matrix(
    basis: &SpectralBasis,
    potential: &Potential1D,
) -> Result<(Csr, OperatorFactors)> {
    let f = assemble_factors(basis, potential)?;
    Ok((f.operator(1.0, 1.0), f))
}
