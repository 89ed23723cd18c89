//! Compressed sparse rows, ILU(0) and restarted GMRES.

use crate::error::{Error, Result};

#[derive(Clone, Debug)]
pub struct Csr {
    pub n: usize,
    pub row_ptr: Vec<usize>,
    pub cols: Vec<usize>,
    pub vals: Vec<f64>,
}

impl Csr {
    /// Build from per-row `(column, value)` lists; duplicates are summed.
    pub fn from_rows(n: usize, rows: Vec<Vec<(usize, f64)>>) -> Self {
        let mut row_ptr = Vec::with_capacity(n + 1);
        let mut cols = Vec::new();
        let mut vals = Vec::new();
        row_ptr.push(0);
        for mut row in rows {
            row.sort_by_key(|e| e.0);
            let mut last: Option<usize> = None;
            for (c, v) in row {
                if last == Some(c) {
                    *vals.last_mut().unwrap() += v;
                } else {
                    cols.push(c);
                    vals.push(v);
                    last = Some(c);
                }
            }
            row_ptr.push(cols.len());
        }
        Csr {
            n,
            row_ptr,
            cols,
            vals,
        }
    }

    pub fn nnz(&self) -> usize {
        self.vals.len()
    }

    pub fn matvec(&self, x: &[f64]) -> Vec<f64> {
        let mut y = vec![0.0; self.n];
        self.matvec_into(x, &mut y);
        y
    }

    pub fn matvec_into(&self, x: &[f64], y: &mut [f64]) {
        for (i, yi) in y.iter_mut().enumerate() {
            let mut s = 0.0;
            for p in self.row_ptr[i]..self.row_ptr[i + 1] {
                s += self.vals[p] * x[self.cols[p]];
            }
            *yi = s;
        }
    }

    /// Row-major dense copy.
    pub fn to_dense(&self) -> Vec<f64> {
        let mut d = vec![0.0; self.n * self.n];
        for i in 0..self.n {
            for p in self.row_ptr[i]..self.row_ptr[i + 1] {
                d[i * self.n + self.cols[p]] += self.vals[p];
            }
        }
        d
    }

    /// `[[A, u], [u^T, 0]]`, with an explicit zero on the new diagonal.
    pub fn bordered(&self, u: &[f64]) -> Csr {
        let n = self.n;
        let mut rows: Vec<Vec<(usize, f64)>> = Vec::with_capacity(n + 1);
        for i in 0..n {
            let mut r: Vec<(usize, f64)> = (self.row_ptr[i]..self.row_ptr[i + 1])
                .map(|p| (self.cols[p], self.vals[p]))
                .collect();
            if u[i] != 0.0 {
                r.push((n, u[i]));
            }
            rows.push(r);
        }
        let mut last: Vec<(usize, f64)> = u
            .iter()
            .enumerate()
            .filter(|(_, v)| **v != 0.0)
            .map(|(j, &v)| (j, v))
            .collect();
        last.push((n, 0.0));
        rows.push(last);
        Csr::from_rows(n + 1, rows)
    }

    /// Maximum absolute column sum.
    pub fn norm1(&self) -> f64 {
        let mut sums = vec![0.0; self.n];
        for (&c, &v) in self.cols.iter().zip(&self.vals) {
            sums[c] += v.abs();
        }
        sums.into_iter().fold(0.0, f64::max)
    }
}

/// Incomplete LU factorization with the sparsity pattern of the matrix.
/// Diagonal entries missing from the pattern are inserted; tiny pivots are
/// replaced by a small multiple of the largest diagonal magnitude.
#[derive(Clone, Debug)]
pub struct Ilu0 {
    lu: Csr,
    diag: Vec<usize>,
    pub replaced_pivots: usize,
}

impl Ilu0 {
    pub fn new(a: &Csr) -> Self {
        let n = a.n;
        // ensure diagonal is present
        let rows: Vec<Vec<(usize, f64)>> = (0..n)
            .map(|i| {
                let mut r: Vec<(usize, f64)> = (a.row_ptr[i]..a.row_ptr[i + 1])
                    .map(|p| (a.cols[p], a.vals[p]))
                    .collect();
                r.push((i, 0.0));
                r
            })
            .collect();
        let mut lu = Csr::from_rows(n, rows);
        let diag: Vec<usize> = (0..n)
            .map(|i| {
                (lu.row_ptr[i]..lu.row_ptr[i + 1])
                    .find(|&p| lu.cols[p] == i)
                    .unwrap()
            })
            .collect();
        let scale = diag
            .iter()
            .fold(0.0f64, |m, &p| m.max(lu.vals[p].abs()))
            .max(1e-300);
        let floor = 1e-10 * scale;
        let mut replaced = 0;
        let mut pos = vec![usize::MAX; n];
        for i in 0..n {
            let (start, end) = (lu.row_ptr[i], lu.row_ptr[i + 1]);
            for p in start..end {
                pos[lu.cols[p]] = p;
            }
            for p in start..diag[i] {
                let k = lu.cols[p];
                let lik = lu.vals[p] / lu.vals[diag[k]];
                lu.vals[p] = lik;
                for pp in diag[k] + 1..lu.row_ptr[k + 1] {
                    let t = pos[lu.cols[pp]];
                    if t != usize::MAX {
                        lu.vals[t] -= lik * lu.vals[pp];
                    }
                }
            }
            let d = &mut lu.vals[diag[i]];
            if d.abs() < floor {
                *d = if *d < 0.0 { -floor } else { floor };
                replaced += 1;
            }
            for p in start..end {
                pos[lu.cols[p]] = usize::MAX;
            }
        }
        Ilu0 {
            lu,
            diag,
            replaced_pivots: replaced,
        }
    }

    /// Solve `L U x = r` in place.
    pub fn apply(&self, x: &mut [f64]) {
        let lu = &self.lu;
        for i in 0..lu.n {
            let mut s = x[i];
            for p in lu.row_ptr[i]..self.diag[i] {
                s -= lu.vals[p] * x[lu.cols[p]];
            }
            x[i] = s;
        }
        for i in (0..lu.n).rev() {
            let mut s = x[i];
            for p in self.diag[i] + 1..lu.row_ptr[i + 1] {
                s -= lu.vals[p] * x[lu.cols[p]];
            }
            x[i] = s / lu.vals[self.diag[i]];
        }
    }
}

/// Outcome of an iterative solve.
#[derive(Clone, Debug)]
pub struct KrylovReport {
    pub iterations: usize,
    pub relative_residual: f64,
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

/// Right-preconditioned restarted GMRES. Returns the solution and the
/// iteration count; fails if the relative residual does not reach `tol`.
pub fn gmres(
    a: &Csr,
    b: &[f64],
    precond: &Ilu0,
    restart: usize,
    max_iter: usize,
    tol: f64,
) -> Result<(Vec<f64>, KrylovReport)> {
    let n = a.n;
    let bnorm = dot(b, b).sqrt();
    let mut x = vec![0.0; n];
    if bnorm == 0.0 {
        return Ok((
            x,
            KrylovReport {
                iterations: 0,
                relative_residual: 0.0,
            },
        ));
    }
    let mut total = 0;
    let mut w = vec![0.0; n];
    loop {
        let ax = a.matvec(&x);
        let r: Vec<f64> = b.iter().zip(&ax).map(|(b, a)| b - a).collect();
        let beta = dot(&r, &r).sqrt();
        if beta <= tol * bnorm {
            return Ok((
                x,
                KrylovReport {
                    iterations: total,
                    relative_residual: beta / bnorm,
                },
            ));
        }
        if total >= max_iter {
            return Err(Error::Solver(format!(
                "GMRES did not converge in {max_iter} iterations (relative residual {:e})",
                beta / bnorm
            )));
        }
        let mut basis: Vec<Vec<f64>> = vec![r.iter().map(|v| v / beta).collect()];
        let mut h = vec![vec![0.0; restart]; restart + 1];
        let (mut cs, mut sn) = (vec![0.0; restart], vec![0.0; restart]);
        let mut g = vec![0.0; restart + 1];
        g[0] = beta;
        let mut k_done = 0;
        for k in 0..restart {
            let mut z = basis[k].clone();
            precond.apply(&mut z);
            a.matvec_into(&z, &mut w);
            for (j, vj) in basis.iter().enumerate() {
                let hj = dot(&w, vj);
                h[j][k] = hj;
                for (wi, vi) in w.iter_mut().zip(vj) {
                    *wi -= hj * vi;
                }
            }
            let hn = dot(&w, &w).sqrt();
            h[k + 1][k] = hn;
            for j in 0..k {
                let t = cs[j] * h[j][k] + sn[j] * h[j + 1][k];
                h[j + 1][k] = -sn[j] * h[j][k] + cs[j] * h[j + 1][k];
                h[j][k] = t;
            }
            let denom = h[k][k].hypot(h[k + 1][k]);
            cs[k] = h[k][k] / denom;
            sn[k] = h[k + 1][k] / denom;
            h[k][k] = denom;
            h[k + 1][k] = 0.0;
            g[k + 1] = -sn[k] * g[k];
            g[k] *= cs[k];
            total += 1;
            k_done = k + 1;
            if g[k + 1].abs() <= tol * bnorm || total >= max_iter || hn == 0.0 {
                break;
            }
            basis.push(w.iter().map(|v| v / hn).collect());
        }
        // back substitution
        let mut y = vec![0.0; k_done];
        for i in (0..k_done).rev() {
            let mut s = g[i];
            for j in i + 1..k_done {
                s -= h[i][j] * y[j];
            }
            y[i] = s / h[i][i];
        }
        let mut update = vec![0.0; n];
        for (j, yj) in y.iter().enumerate() {
            for (u, v) in update.iter_mut().zip(&basis[j]) {
                *u += yj * v;
            }
        }
        precond.apply(&mut update);
        for (xi, ui) in x.iter_mut().zip(&update) {
            *xi += ui;
        }
    }
}
