//! Control variates tabulated on a Cartesian `(q, p)` grid with bilinear
//! lookup.

mod cache;
mod gle;
mod tensor;

use std::f64::consts::PI;
use std::fmt;
use std::str::FromStr;

pub use cache::{content_hash, read_gle_grid, read_grid, write_gle_grid, write_grid};
pub use gle::GleGridCV;
pub use tensor::TensorizedCV;

use crate::control::ControlVariate;
use crate::error::{ensure_positive, invalid, Error, Result};
use crate::potential::{wrap_angle, Potential, Potential1D, TWO_PI};

/// Number of trapezoid nodes in `q` used when integrating over positions.
pub const D_QUADRATURE_NODES: usize = 1024;

/// Where the tabulated function came from.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum CvSource {
    Galerkin,
    Underdamped,
    File,
}

impl CvSource {
    pub fn as_str(&self) -> &'static str {
        match self {
            CvSource::Galerkin => "galerkin",
            CvSource::Underdamped => "underdamped",
            CvSource::File => "file",
        }
    }
}

impl fmt::Display for CvSource {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for CvSource {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "galerkin" => Ok(CvSource::Galerkin),
            "underdamped" => Ok(CvSource::Underdamped),
            "file" => Ok(CvSource::File),
            _ => Err(Error::Format(format!("unknown grid source tag '{s}'"))),
        }
    }
}

/// Parameters a grid was built for.
#[derive(Clone, Debug, PartialEq)]
pub struct GridMeta {
    pub beta: f64,
    pub gamma: f64,
    pub potential: String,
    pub source: CvSource,
}

/// `psi` and `d_p psi` on `nq x (np + 1)` nodes
/// `(q_i, p_j) = (-pi + i dq, -lp + j dp)`; column `nq` is column `0`.
#[derive(Clone, Debug)]
pub struct GridCV {
    nq: usize,
    np: usize,
    lp: f64,
    inv_dq: f64,
    inv_dp: f64,
    psi: Vec<f64>,
    dpsi: Vec<f64>,
    d_psi: f64,
    meta: GridMeta,
}

/// Cell lookup shared by value and gradient queries.
#[derive(Clone, Copy)]
struct Cell {
    i0: usize,
    i1: usize,
    j: usize,
    tq: f64,
    tp: f64,
}

impl GridCV {
    /// Build from stored node values (row `i` holds the `np + 1` momentum
    /// nodes of position `q_i`). `d_psi` starts as NaN; see
    /// [`with_d_psi`](Self::with_d_psi).
    pub fn from_values(
        nq: usize,
        np: usize,
        lp: f64,
        meta: GridMeta,
        psi: Vec<f64>,
        dpsi: Vec<f64>,
    ) -> Result<Self> {
        if nq < 2 || np < 1 {
            return Err(invalid(format!(
                "grid needs nq >= 2 and np >= 1, got {nq} x {np}"
            )));
        }
        ensure_positive("lp", lp)?;
        let len = nq * (np + 1);
        if psi.len() != len || dpsi.len() != len {
            return Err(invalid(format!(
                "expected {len} values per field, got {} and {}",
                psi.len(),
                dpsi.len()
            )));
        }
        if psi.iter().chain(&dpsi).any(|x| !x.is_finite()) {
            return Err(Error::Domain("grid contains non-finite values".into()));
        }
        Ok(Self {
            nq,
            np,
            lp,
            inv_dq: nq as f64 / TWO_PI,
            inv_dp: np as f64 / (2.0 * lp),
            psi,
            dpsi,
            d_psi: f64::NAN,
            meta,
        })
    }

    /// Tabulate `f(q, p) -> (psi, d_p psi)` at the nodes.
    pub fn from_fn(
        nq: usize,
        np: usize,
        lp: f64,
        meta: GridMeta,
        mut f: impl FnMut(f64, f64) -> (f64, f64),
    ) -> Result<Self> {
        let mut psi = Vec::with_capacity(nq * (np + 1));
        let mut dpsi = Vec::with_capacity(nq * (np + 1));
        for i in 0..nq {
            let q = -PI + TWO_PI * i as f64 / nq as f64;
            for j in 0..=np {
                let p = -lp + 2.0 * lp * j as f64 / np as f64;
                let (a, b) = f(q, p);
                psi.push(a);
                dpsi.push(b);
            }
        }
        Self::from_values(nq, np, lp, meta, psi, dpsi)
    }

    pub fn with_d_psi(mut self, d_psi: f64) -> Self {
        self.d_psi = d_psi;
        self
    }

    pub fn nq(&self) -> usize {
        self.nq
    }
    pub fn np(&self) -> usize {
        self.np
    }
    pub fn lp(&self) -> f64 {
        self.lp
    }
    pub fn meta(&self) -> &GridMeta {
        &self.meta
    }
    pub fn psi_values(&self) -> &[f64] {
        &self.psi
    }
    pub fn dpsi_values(&self) -> &[f64] {
        &self.dpsi
    }
    pub fn q_node(&self, i: usize) -> f64 {
        -PI + TWO_PI * i as f64 / self.nq as f64
    }
    pub fn p_node(&self, j: usize) -> f64 {
        -self.lp + 2.0 * self.lp * j as f64 / self.np as f64
    }

    #[inline]
    fn cell(&self, q: f64, p: f64) -> Cell {
        let x = (wrap_angle(q) + PI) * self.inv_dq;
        let i0 = (x as usize).min(self.nq - 1);
        let i1 = if i0 + 1 == self.nq { 0 } else { i0 + 1 };
        let y = (p.clamp(-self.lp, self.lp) + self.lp) * self.inv_dp;
        let j = (y as usize).min(self.np - 1);
        Cell {
            i0,
            i1,
            j,
            tq: x - i0 as f64,
            tp: y - j as f64,
        }
    }

    #[inline]
    fn blend(&self, data: &[f64], c: Cell) -> f64 {
        let stride = self.np + 1;
        let a = c.i0 * stride + c.j;
        let b = c.i1 * stride + c.j;
        let f00 = data[a];
        let f01 = data[a + 1];
        let f10 = data[b];
        let f11 = data[b + 1];
        f00 + (f10 - f00) * c.tq + (f01 - f00) * c.tp + (f11 - f10 - f01 + f00) * c.tq * c.tp
    }

    /// Bilinear interpolation of `(psi, d_p psi)`. Momenta outside
    /// `[-lp, lp]` are clamped to the boundary.
    #[inline]
    pub fn interpolate(&self, q: f64, p: f64) -> (f64, f64) {
        let c = self.cell(q, p);
        (self.blend(&self.psi, c), self.blend(&self.dpsi, c))
    }

    #[inline]
    pub fn psi_at(&self, q: f64, p: f64) -> f64 {
        self.blend(&self.psi, self.cell(q, p))
    }

    #[inline]
    pub fn dpsi_at(&self, q: f64, p: f64) -> f64 {
        self.blend(&self.dpsi, self.cell(q, p))
    }

    /// `gamma / beta * E |d_p psi|^2` where positions are weighted by the
    /// (unnormalized) density `position_weight` on 1024 trapezoid nodes and
    /// momenta by `exp(-beta p^2 / 2)` on the grid's own nodes.
    pub fn compute_d_with(
        &self,
        position_weight: impl Fn(f64) -> f64,
        gamma: f64,
        beta: f64,
    ) -> f64 {
        let stride = self.np + 1;
        let pw: Vec<f64> = (0..=self.np)
            .map(|j| {
                let p = self.p_node(j);
                let end = if j == 0 || j == self.np { 0.5 } else { 1.0 };
                end * (-0.5 * beta * p * p).exp()
            })
            .collect();
        let p_norm: f64 = pw.iter().sum();
        let mut num = 0.0;
        let mut q_norm = 0.0;
        for k in 0..D_QUADRATURE_NODES {
            let q = -PI + TWO_PI * k as f64 / D_QUADRATURE_NODES as f64;
            let w = position_weight(q);
            if w == 0.0 {
                continue;
            }
            let c = self.cell(q, 0.0);
            let (ra, rb) = (c.i0 * stride, c.i1 * stride);
            let mut inner = 0.0;
            for (j, &wp) in pw.iter().enumerate() {
                let g = self.dpsi[ra + j] + (self.dpsi[rb + j] - self.dpsi[ra + j]) * c.tq;
                inner += wp * g * g;
            }
            num += w * inner;
            q_norm += w;
        }
        gamma / beta * num / (q_norm * p_norm)
    }

    /// [`compute_d_with`](Self::compute_d_with) under the Boltzmann weight of
    /// a one-dimensional potential.
    pub fn compute_d(&self, potential: &Potential1D, gamma: f64, beta: f64) -> f64 {
        self.compute_d_with(|q| (-beta * potential.eval(q)).exp(), gamma, beta)
    }
}

impl ControlVariate<1> for GridCV {
    #[inline]
    fn value(&self, q: &[f64; 1], p: &[f64; 1]) -> f64 {
        self.psi_at(q[0], p[0])
    }
    #[inline]
    fn grad_p(&self, q: &[f64; 1], p: &[f64; 1]) -> [f64; 1] {
        [self.dpsi_at(q[0], p[0])]
    }
    fn d_psi(&self) -> f64 {
        self.d_psi
    }
    fn source(&self) -> &str {
        self.meta.source.as_str()
    }
}

/// Tabulate a control variate and attach `d[psi]` for the given potential.
pub fn tabulate(
    potential: &Potential1D,
    nq: usize,
    np: usize,
    lp: f64,
    meta: GridMeta,
    f: impl FnMut(f64, f64) -> (f64, f64),
) -> Result<GridCV> {
    if !potential.is_periodic() {
        return Err(invalid("grid control variates need a periodic potential"));
    }
    let (gamma, beta) = (meta.gamma, meta.beta);
    let grid = GridCV::from_fn(nq, np, lp, meta, f)?;
    let d = grid.compute_d(potential, gamma, beta);
    Ok(grid.with_d_psi(d))
}
