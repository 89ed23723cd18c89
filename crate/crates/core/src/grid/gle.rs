use std::f64::consts::PI;

use super::D_QUADRATURE_NODES;
use crate::control::GleControlVariate;
use crate::error::{ensure_positive, invalid, Error, Result};
use crate::potential::{wrap_angle, Potential1D, TWO_PI};

/// Control variate for the generalized dynamics tabulated on
/// `nq x (np + 1) x (nz + 1)` nodes over `[-pi, pi) x [-lp, lp] x [-lz, lz]`
/// with trilinear lookup. Stores `psi` and `d_z psi`.
#[derive(Clone, Debug)]
pub struct GleGridCV {
    nq: usize,
    np: usize,
    nz: usize,
    lp: f64,
    lz: f64,
    psi: Vec<f64>,
    dzpsi: Vec<f64>,
    d_psi: f64,
    pub beta: f64,
    pub nu: f64,
    pub potential: String,
}

#[derive(Clone, Copy)]
struct Cell3 {
    base: [usize; 2],
    j: usize,
    k: usize,
    t: [f64; 3],
}

impl GleGridCV {
    #[allow(clippy::too_many_arguments)]
    pub fn from_values(
        dims: (usize, usize, usize),
        lp: f64,
        lz: f64,
        beta: f64,
        nu: f64,
        potential: String,
        psi: Vec<f64>,
        dzpsi: Vec<f64>,
    ) -> Result<Self> {
        let (nq, np, nz) = dims;
        if nq < 2 || np < 1 || nz < 1 {
            return Err(invalid("grid needs nq >= 2, np >= 1, nz >= 1"));
        }
        ensure_positive("lp", lp)?;
        ensure_positive("lz", lz)?;
        ensure_positive("beta", beta)?;
        ensure_positive("nu", nu)?;
        let len = nq * (np + 1) * (nz + 1);
        if psi.len() != len || dzpsi.len() != len {
            return Err(invalid(format!("expected {len} values per field")));
        }
        if psi.iter().chain(&dzpsi).any(|x| !x.is_finite()) {
            return Err(Error::Domain("grid contains non-finite values".into()));
        }
        Ok(Self {
            nq,
            np,
            nz,
            lp,
            lz,
            psi,
            dzpsi,
            d_psi: f64::NAN,
            beta,
            nu,
            potential,
        })
    }

    /// Tabulate `f(q, p, z) -> (psi, d_z psi)`.
    #[allow(clippy::too_many_arguments)]
    pub fn from_fn(
        dims: (usize, usize, usize),
        lp: f64,
        lz: f64,
        beta: f64,
        nu: f64,
        potential: String,
        mut f: impl FnMut(f64, f64, f64) -> (f64, f64),
    ) -> Result<Self> {
        let (nq, np, nz) = dims;
        let mut psi = Vec::with_capacity(nq * (np + 1) * (nz + 1));
        let mut dz = Vec::with_capacity(psi.capacity());
        for i in 0..nq {
            let q = -PI + TWO_PI * i as f64 / nq as f64;
            for j in 0..=np {
                let p = -lp + 2.0 * lp * j as f64 / np as f64;
                for k in 0..=nz {
                    let z = -lz + 2.0 * lz * k as f64 / nz as f64;
                    let (a, b) = f(q, p, z);
                    psi.push(a);
                    dz.push(b);
                }
            }
        }
        Self::from_values(dims, lp, lz, beta, nu, potential, psi, dz)
    }

    pub fn with_d_psi(mut self, d: f64) -> Self {
        self.d_psi = d;
        self
    }

    pub fn dims(&self) -> (usize, usize, usize) {
        (self.nq, self.np, self.nz)
    }
    pub fn lp(&self) -> f64 {
        self.lp
    }
    pub fn lz(&self) -> f64 {
        self.lz
    }
    pub fn psi_values(&self) -> &[f64] {
        &self.psi
    }
    pub fn dzpsi_values(&self) -> &[f64] {
        &self.dzpsi
    }

    #[inline]
    fn cell(&self, q: f64, p: f64, z: f64) -> Cell3 {
        let x = (wrap_angle(q) + PI) * self.nq as f64 / TWO_PI;
        let i0 = (x as usize).min(self.nq - 1);
        let i1 = if i0 + 1 == self.nq { 0 } else { i0 + 1 };
        let y = (p.clamp(-self.lp, self.lp) + self.lp) * self.np as f64 / (2.0 * self.lp);
        let j = (y as usize).min(self.np - 1);
        let w = (z.clamp(-self.lz, self.lz) + self.lz) * self.nz as f64 / (2.0 * self.lz);
        let k = (w as usize).min(self.nz - 1);
        let plane = (self.np + 1) * (self.nz + 1);
        Cell3 {
            base: [i0 * plane, i1 * plane],
            j,
            k,
            t: [x - i0 as f64, y - j as f64, w - k as f64],
        }
    }

    #[inline]
    fn blend(&self, data: &[f64], c: Cell3) -> f64 {
        let row = self.nz + 1;
        let mut acc = 0.0;
        for (a, &b) in c.base.iter().enumerate() {
            let wq = if a == 0 { 1.0 - c.t[0] } else { c.t[0] };
            for dj in 0..2 {
                let wp = if dj == 0 { 1.0 - c.t[1] } else { c.t[1] };
                let idx = b + (c.j + dj) * row + c.k;
                let along = data[idx] + (data[idx + 1] - data[idx]) * c.t[2];
                acc += wq * wp * along;
            }
        }
        acc
    }

    /// `beta^{-1} / nu^2 * E |d_z psi|^2` under `exp(-beta (V + p^2/2 + z^2/2))`.
    pub fn compute_d(&self, potential: &Potential1D) -> f64 {
        let beta = self.beta;
        let gauss = |n: usize, l: f64| -> Vec<f64> {
            (0..=n)
                .map(|j| {
                    let x = -l + 2.0 * l * j as f64 / n as f64;
                    let end = if j == 0 || j == n { 0.5 } else { 1.0 };
                    end * (-0.5 * beta * x * x).exp()
                })
                .collect()
        };
        let wp = gauss(self.np, self.lp);
        let wz = gauss(self.nz, self.lz);
        let norm_pz: f64 = wp.iter().sum::<f64>() * wz.iter().sum::<f64>();
        let (mut num, mut qn) = (0.0, 0.0);
        for m in 0..D_QUADRATURE_NODES {
            let q = -PI + TWO_PI * m as f64 / D_QUADRATURE_NODES as f64;
            let wq = (-beta * potential.eval(q)).exp();
            qn += wq;
            let mut inner = 0.0;
            for (j, &a) in wp.iter().enumerate() {
                let p = -self.lp + 2.0 * self.lp * j as f64 / self.np as f64;
                for (k, &b) in wz.iter().enumerate() {
                    let z = -self.lz + 2.0 * self.lz * k as f64 / self.nz as f64;
                    let g = self.blend(&self.dzpsi, self.cell(q, p, z));
                    inner += a * b * g * g;
                }
            }
            num += wq * inner;
        }
        num / (qn * norm_pz) / (beta * self.nu * self.nu)
    }
}

impl GleControlVariate for GleGridCV {
    #[inline]
    fn value(&self, q: f64, p: f64, z: f64) -> f64 {
        self.blend(&self.psi, self.cell(q, p, z))
    }
    #[inline]
    fn grad_z(&self, q: f64, p: f64, z: f64) -> f64 {
        self.blend(&self.dzpsi, self.cell(q, p, z))
    }
    fn d_psi(&self) -> f64 {
        self.d_psi
    }
    fn source(&self) -> &str {
        "file"
    }
}
