use faer::linalg::solvers::Solve;
use faer::Mat;

use super::assemble::{assemble_factors, OperatorFactors};
use super::basis::{hermite_with_derivative, trig_values, SpectralBasis};
use super::sparse::{gmres, Csr, Ilu0};
use crate::error::{Error, Result};
use crate::grid::{tabulate, CvSource, GridCV, GridMeta};
use crate::potential::{Potential, Potential1D};

/// Largest mode index solved with a dense factorization under `Auto`.
pub const DENSE_MAX_N: usize = 80;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum SolverChoice {
    /// Dense LU for `n <= 80`, preconditioned GMRES above.
    Auto,
    Dense,
    Iterative,
}

#[derive(Clone, Copy, Debug)]
pub struct SolverOptions {
    pub choice: SolverChoice,
    pub tolerance: f64,
    pub restart: usize,
    pub max_iterations: usize,
}

impl Default for SolverOptions {
    fn default() -> Self {
        Self {
            choice: SolverChoice::Auto,
            tolerance: 1e-11,
            restart: 150,
            max_iterations: 20_000,
        }
    }
}

/// Galerkin approximation of the Poisson solution.
#[derive(Clone, Debug)]
pub struct SpectralSolution {
    pub basis: SpectralBasis,
    /// Coefficients in `e_ij`, position index outermost.
    pub coeffs: Vec<f64>,
    /// Lagrange multiplier of the zero-mean constraint.
    pub multiplier: f64,
    /// Euclidean residual of the bordered system.
    pub residual_norm: f64,
    pub rhs_norm: f64,
    /// 1-norm condition estimate (dense path only).
    pub condition_estimate: Option<f64>,
    pub method: &'static str,
    pub potential: Potential1D,
    factors: OperatorFactors,
}

/// Assemble and solve the bordered Galerkin system.
pub fn solve_poisson(
    basis: &SpectralBasis,
    potential: &Potential1D,
    options: &SolverOptions,
) -> Result<SpectralSolution> {
    let factors = assemble_factors(basis, potential)?;
    let a = factors.operator(1.0, 1.0);
    let u = factors.constraint();
    let k = a.bordered(&u);
    let mut rhs = factors.rhs();
    rhs.push(0.0);
    let dense = match options.choice {
        SolverChoice::Auto => basis.n <= DENSE_MAX_N,
        SolverChoice::Dense => true,
        SolverChoice::Iterative => false,
    };
    let (x, condition, method) = if dense {
        let (x, cond) = dense_solve(&k, &rhs)?;
        (x, Some(cond), "dense-lu")
    } else {
        let ilu = Ilu0::new(&k);
        if ilu.replaced_pivots > 0 {
            log::debug!("ILU(0) replaced {} small pivots", ilu.replaced_pivots);
        }
        let (x, report) = gmres(
            &k,
            &rhs,
            &ilu,
            options.restart,
            options.max_iterations,
            options.tolerance,
        )?;
        log::info!("GMRES converged in {} iterations", report.iterations);
        (x, None, "gmres-ilu0")
    };
    if let Some(c) = condition {
        if c > 1e12 {
            log::warn!(
                "Galerkin system is ill-conditioned (estimate {c:.3e}) at gamma = {}",
                basis.gamma
            );
        }
    }
    let kx = k.matvec(&x);
    let residual_norm = kx
        .iter()
        .zip(&rhs)
        .map(|(a, b)| (a - b).powi(2))
        .sum::<f64>()
        .sqrt();
    let rhs_norm = rhs.iter().map(|v| v * v).sum::<f64>().sqrt();
    if residual_norm > 1e-8 * rhs_norm {
        log::warn!("Galerkin residual {residual_norm:e} exceeds 1e-8 of the right-hand side");
    }
    if x.iter().any(|v| !v.is_finite()) {
        return Err(Error::Solver("Galerkin solution is not finite".into()));
    }
    let n = basis.unknowns();
    Ok(SpectralSolution {
        basis: *basis,
        coeffs: x[..n].to_vec(),
        multiplier: x[n],
        residual_norm,
        rhs_norm,
        condition_estimate: condition,
        method,
        potential: *potential,
        factors,
    })
}

fn dense_solve(k: &Csr, rhs: &[f64]) -> Result<(Vec<f64>, f64)> {
    let n = k.n;
    let mut m = Mat::<f64>::zeros(n, n);
    for i in 0..n {
        for p in k.row_ptr[i]..k.row_ptr[i + 1] {
            m[(i, k.cols[p])] += k.vals[p];
        }
    }
    let lu = m.partial_piv_lu();
    let b = Mat::<f64>::from_fn(n, 1, |i, _| rhs[i]);
    let x = lu.solve(&b);
    let x: Vec<f64> = (0..n).map(|i| x[(i, 0)]).collect();
    let inv_norm = hager_inverse_norm1(
        n,
        |v| {
            let r = lu.solve(Mat::<f64>::from_fn(n, 1, |i, _| v[i]));
            (0..n).map(|i| r[(i, 0)]).collect()
        },
        |v| {
            let r = lu.solve_transpose(Mat::<f64>::from_fn(n, 1, |i, _| v[i]));
            (0..n).map(|i| r[(i, 0)]).collect()
        },
    );
    Ok((x, inv_norm * k.norm1()))
}

/// Hager's estimate of `||K^{-1}||_1` from solves with `K` and `K^T`.
pub(crate) fn hager_inverse_norm1(
    n: usize,
    solve: impl Fn(&[f64]) -> Vec<f64>,
    solve_t: impl Fn(&[f64]) -> Vec<f64>,
) -> f64 {
    let mut x = vec![1.0 / n as f64; n];
    let mut estimate = 0.0;
    for _ in 0..5 {
        let y = solve(&x);
        estimate = y.iter().map(|v| v.abs()).sum::<f64>();
        let s: Vec<f64> = y
            .iter()
            .map(|v| if *v >= 0.0 { 1.0 } else { -1.0 })
            .collect();
        let z = solve_t(&s);
        let (jmax, zmax) = z.iter().enumerate().fold((0, 0.0f64), |acc, (j, v)| {
            if v.abs() > acc.1 {
                (j, v.abs())
            } else {
                acc
            }
        });
        let ztx: f64 = z.iter().zip(&x).map(|(a, b)| a * b).sum();
        if zmax <= ztx {
            break;
        }
        x = vec![0.0; n];
        x[jmax] = 1.0;
    }
    estimate
}

impl SpectralSolution {
    /// `<Psi_N, p>` in `L^2(mu)`, the Galerkin estimate of the diffusion
    /// coefficient.
    pub fn diffusion(&self) -> f64 {
        self.coeffs
            .iter()
            .zip(self.factors.rhs())
            .map(|(c, f)| c * f)
            .sum()
    }

    /// `<Psi_N, 1>` in `L^2(mu)`.
    pub fn mean(&self) -> f64 {
        let s = self.factors.partition.sqrt().recip();
        let m = self.basis.size();
        let mut acc = 0.0;
        for i in 0..m {
            for j in 0..m {
                acc += self.coeffs[i * m + j] * s * self.factors.a[i] * self.factors.c[j];
            }
        }
        acc
    }

    pub fn factors(&self) -> &OperatorFactors {
        &self.factors
    }

    /// `(Psi_N, d_p Psi_N)` by direct summation over the basis.
    pub fn evaluate(&self, q: f64, p: f64) -> (f64, f64) {
        let m = self.basis.size();
        let mut g = vec![0.0; m];
        trig_values(q, &mut g);
        let (h, dh) = self.momentum_table(&[p]);
        let mut val = 0.0;
        let mut der = 0.0;
        for i in 0..m {
            for j in 0..m {
                let c = self.coeffs[i * m + j] * g[i];
                val += c * h[j];
                der += c * dh[j];
            }
        }
        let pre = self.position_prefactor(q);
        (pre * val, pre * der)
    }

    fn position_prefactor(&self, q: f64) -> f64 {
        self.factors.partition.sqrt() * (0.5 * self.basis.beta * self.potential.eval(q)).exp()
    }

    /// `e^{beta p^2/4} h_j(p)` and its `p`-derivative at each momentum.
    fn momentum_table(&self, ps: &[f64]) -> (Vec<f64>, Vec<f64>) {
        let m = self.basis.size();
        let sigma = self.basis.sigma;
        let lift = self.basis.beta * sigma * sigma / 4.0;
        let mut vals = vec![0.0; ps.len() * m];
        let mut ders = vec![0.0; ps.len() * m];
        let mut scratch = vec![0.0; m + 1];
        for (k, &p) in ps.iter().enumerate() {
            let (v, d) = (&mut vals[k * m..(k + 1) * m], &mut ders[k * m..(k + 1) * m]);
            hermite_with_derivative(p / sigma, lift, v, d, &mut scratch);
            for j in 0..m {
                v[j] /= sigma.sqrt();
                d[j] /= sigma.powf(1.5);
            }
        }
        (vals, ders)
    }

    /// Tabulate `Psi_N` and `d_p Psi_N` on a grid and attach `d[psi]`.
    pub fn export_to_grid(&self, nq: usize, np: usize, lp: f64) -> Result<GridCV> {
        let m = self.basis.size();
        let ps: Vec<f64> = (0..=np)
            .map(|j| -lp + 2.0 * lp * j as f64 / np as f64)
            .collect();
        let (h, dh) = self.momentum_table(&ps);
        let mut g = vec![0.0; m];
        let mut row = vec![0.0; m];
        let mut current_q = f64::NAN;
        let meta = GridMeta {
            beta: self.basis.beta,
            gamma: self.basis.gamma,
            potential: self.potential.name(),
            source: CvSource::Galerkin,
        };
        tabulate(&self.potential, nq, np, lp, meta, |q, p| {
            if q != current_q {
                current_q = q;
                trig_values(q, &mut g);
                let pre = self.position_prefactor(q);
                for (j, r) in row.iter_mut().enumerate() {
                    *r = pre * (0..m).map(|i| g[i] * self.coeffs[i * m + j]).sum::<f64>();
                }
            }
            let k = ((p + lp) / (2.0 * lp) * np as f64).round() as usize;
            let (hv, dv) = (&h[k * m..(k + 1) * m], &dh[k * m..(k + 1) * m]);
            let val: f64 = row.iter().zip(hv).map(|(a, b)| a * b).sum();
            let der: f64 = row.iter().zip(dv).map(|(a, b)| a * b).sum();
            (val, der)
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn free_particle_solution_is_momentum() {
        for &(beta, gamma) in &[(1.0, 1.0), (1.0, 2.0), (2.0, 0.5)] {
            let basis = SpectralBasis::new(8, 1.0 / f64::sqrt(beta), beta, gamma).unwrap();
            let sol = solve_poisson(&basis, &Potential1D::Zero, &SolverOptions::default()).unwrap();
            assert!((sol.diffusion() - 1.0 / (gamma * beta)).abs() < 1e-12);
            assert!(sol.multiplier.abs() < 1e-10);
            for (idx, &c) in sol.coeffs.iter().enumerate() {
                let want = if idx == basis.index(0, 1) {
                    basis.sigma / gamma
                } else {
                    0.0
                };
                assert!((c - want).abs() < 1e-8);
            }
            let (v, d) = sol.evaluate(0.7, 1.3);
            assert!((v - 1.3 / gamma).abs() < 1e-10);
            assert!((d - 1.0 / gamma).abs() < 1e-10);
        }
    }

    #[test]
    fn dense_and_iterative_agree() {
        let basis = SpectralBasis::new(14, 0.7, 1.0, 1.0).unwrap();
        let v = Potential1D::cosine();
        let a = solve_poisson(
            &basis,
            &v,
            &SolverOptions {
                choice: SolverChoice::Dense,
                ..Default::default()
            },
        )
        .unwrap();
        let b = solve_poisson(
            &basis,
            &v,
            &SolverOptions {
                choice: SolverChoice::Iterative,
                ..Default::default()
            },
        )
        .unwrap();
        assert!((a.diffusion() - b.diffusion()).abs() < 1e-9);
        assert!(a.residual_norm <= 1e-8 * a.rhs_norm);
        assert!(b.residual_norm <= 1e-8 * b.rhs_norm);
        assert!(a.mean().abs() < 1e-10);
        assert!(a.condition_estimate.unwrap() > 1.0);
    }

    #[test]
    fn export_matches_direct_summation() {
        let basis = SpectralBasis::new(12, 0.8, 1.0, 1.0).unwrap();
        let sol = solve_poisson(&basis, &Potential1D::cosine(), &SolverOptions::default()).unwrap();
        let grid = sol.export_to_grid(16, 20, 4.0).unwrap();
        for i in [0, 5, 11] {
            for j in [0, 7, 20] {
                let (q, p) = (grid.q_node(i), grid.p_node(j));
                let (v, d) = sol.evaluate(q, p);
                let (gv, gd) = grid.interpolate(q, p);
                assert!((v - gv).abs() < 1e-10 * (1.0 + v.abs()));
                assert!((d - gd).abs() < 1e-10 * (1.0 + d.abs()));
            }
        }
    }

    #[test]
    fn free_particle_export_has_unit_gradient() {
        let basis = SpectralBasis::new(6, 1.0, 1.0, 1.0).unwrap();
        let sol = solve_poisson(&basis, &Potential1D::Zero, &SolverOptions::default()).unwrap();
        let grid = sol.export_to_grid(8, 40, 9.0).unwrap();
        assert!(grid.dpsi_values().iter().all(|d| (d - 1.0).abs() < 1e-8));
        use crate::control::ControlVariate;
        assert!((grid.d_psi() - 1.0).abs() < 1e-6);
    }

    #[test]
    fn hager_estimate_on_diagonal() {
        let d = [1.0, 0.5, 0.01];
        let est = hager_inverse_norm1(
            3,
            |v| v.iter().zip(&d).map(|(a, b)| a / b).collect(),
            |v| v.iter().zip(&d).map(|(a, b)| a / b).collect(),
        );
        assert!((est - 100.0).abs() < 1e-9);
    }
}
