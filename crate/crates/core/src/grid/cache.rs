//! Binary cache files for tabulated control variates.
//!
//! Layout (little endian): 8-byte magic, `nq: u64`, `np: u64`, `lp: f64`,
//! `beta: f64`, `gamma: f64`, potential name and source tag as
//! length-prefixed (`u32`) UTF-8, `d_psi: f64`, then the `psi` and
//! `d_p psi` arrays in row-major order.

use std::io::{Read, Write};
use std::path::Path;

use sha2::{Digest, Sha256};

use super::{CvSource, GleGridCV, GridCV, GridMeta};
use crate::error::{Error, Result};

const MAGIC: &[u8; 8] = b"MOBGRID1";
const MAGIC_GLE: &[u8; 8] = b"MOBGLE01";

struct Writer<W: Write>(W);

impl<W: Write> Writer<W> {
    fn u64(&mut self, x: u64) -> Result<()> {
        Ok(self.0.write_all(&x.to_le_bytes())?)
    }
    fn f64(&mut self, x: f64) -> Result<()> {
        Ok(self.0.write_all(&x.to_le_bytes())?)
    }
    fn str(&mut self, s: &str) -> Result<()> {
        self.0.write_all(&(s.len() as u32).to_le_bytes())?;
        Ok(self.0.write_all(s.as_bytes())?)
    }
    fn array(&mut self, xs: &[f64]) -> Result<()> {
        let mut buf = Vec::with_capacity(xs.len() * 8);
        for x in xs {
            buf.extend_from_slice(&x.to_le_bytes());
        }
        Ok(self.0.write_all(&buf)?)
    }
}

struct Reader<'a> {
    data: &'a [u8],
    pos: usize,
}

impl<'a> Reader<'a> {
    fn take(&mut self, n: usize) -> Result<&'a [u8]> {
        if self.pos + n > self.data.len() {
            return Err(Error::Format("cache file is truncated".into()));
        }
        let s = &self.data[self.pos..self.pos + n];
        self.pos += n;
        Ok(s)
    }
    fn u64(&mut self) -> Result<u64> {
        Ok(u64::from_le_bytes(self.take(8)?.try_into().unwrap()))
    }
    fn f64(&mut self) -> Result<f64> {
        Ok(f64::from_le_bytes(self.take(8)?.try_into().unwrap()))
    }
    fn str(&mut self) -> Result<String> {
        let n = u32::from_le_bytes(self.take(4)?.try_into().unwrap()) as usize;
        String::from_utf8(self.take(n)?.to_vec())
            .map_err(|_| Error::Format("invalid UTF-8 in header".into()))
    }
    fn array(&mut self, n: usize) -> Result<Vec<f64>> {
        let bytes = self.take(
            n.checked_mul(8)
                .ok_or_else(|| Error::Format("array too large".into()))?,
        )?;
        Ok(bytes
            .chunks_exact(8)
            .map(|c| f64::from_le_bytes(c.try_into().unwrap()))
            .collect())
    }
    fn finish(&self) -> Result<()> {
        if self.pos == self.data.len() {
            Ok(())
        } else {
            Err(Error::Format("trailing bytes in cache file".into()))
        }
    }
}

fn dim(x: u64) -> Result<usize> {
    usize::try_from(x)
        .ok()
        .filter(|&v| v > 0 && v < (1 << 24))
        .ok_or_else(|| Error::Format(format!("implausible grid dimension {x}")))
}

pub fn write_grid(path: &Path, grid: &GridCV) -> Result<()> {
    let mut w = Writer(std::io::BufWriter::new(std::fs::File::create(path)?));
    w.0.write_all(MAGIC)?;
    w.u64(grid.nq() as u64)?;
    w.u64(grid.np() as u64)?;
    w.f64(grid.lp())?;
    let m = grid.meta();
    w.f64(m.beta)?;
    w.f64(m.gamma)?;
    w.str(&m.potential)?;
    w.str(m.source.as_str())?;
    w.f64(crate::control::ControlVariate::<1>::d_psi(grid))?;
    w.array(grid.psi_values())?;
    w.array(grid.dpsi_values())?;
    w.0.flush()?;
    Ok(())
}

pub fn read_grid(path: &Path) -> Result<GridCV> {
    let mut data = Vec::new();
    std::fs::File::open(path)?.read_to_end(&mut data)?;
    let mut r = Reader {
        data: &data,
        pos: 0,
    };
    if r.take(8)? != MAGIC {
        return Err(Error::Format(format!(
            "{} is not a grid cache file",
            path.display()
        )));
    }
    let nq = dim(r.u64()?)?;
    let np = dim(r.u64()?)?;
    let lp = r.f64()?;
    let beta = r.f64()?;
    let gamma = r.f64()?;
    let potential = r.str()?;
    let source: CvSource = r.str()?.parse()?;
    let d_psi = r.f64()?;
    let len = nq * (np + 1);
    let psi = r.array(len)?;
    let dpsi = r.array(len)?;
    r.finish()?;
    let meta = GridMeta {
        beta,
        gamma,
        potential,
        source,
    };
    Ok(GridCV::from_values(nq, np, lp, meta, psi, dpsi)?.with_d_psi(d_psi))
}

pub fn write_gle_grid(path: &Path, grid: &GleGridCV) -> Result<()> {
    let mut w = Writer(std::io::BufWriter::new(std::fs::File::create(path)?));
    w.0.write_all(MAGIC_GLE)?;
    let (nq, np, nz) = grid.dims();
    w.u64(nq as u64)?;
    w.u64(np as u64)?;
    w.u64(nz as u64)?;
    w.f64(grid.lp())?;
    w.f64(grid.lz())?;
    w.f64(grid.beta)?;
    w.f64(grid.nu)?;
    w.str(&grid.potential)?;
    w.f64(crate::control::GleControlVariate::d_psi(grid))?;
    w.array(grid.psi_values())?;
    w.array(grid.dzpsi_values())?;
    w.0.flush()?;
    Ok(())
}

pub fn read_gle_grid(path: &Path) -> Result<GleGridCV> {
    let data = std::fs::read(path)?;
    let mut r = Reader {
        data: &data,
        pos: 0,
    };
    if r.take(8)? != MAGIC_GLE {
        return Err(Error::Format(format!(
            "{} is not a GLE grid cache file",
            path.display()
        )));
    }
    let nq = dim(r.u64()?)?;
    let np = dim(r.u64()?)?;
    let nz = dim(r.u64()?)?;
    let lp = r.f64()?;
    let lz = r.f64()?;
    let beta = r.f64()?;
    let nu = r.f64()?;
    let potential = r.str()?;
    let d_psi = r.f64()?;
    let len = nq * (np + 1) * (nz + 1);
    let psi = r.array(len)?;
    let dz = r.array(len)?;
    r.finish()?;
    Ok(
        GleGridCV::from_values((nq, np, nz), lp, lz, beta, nu, potential, psi, dz)?
            .with_d_psi(d_psi),
    )
}

/// Hex SHA-256 of a file's bytes.
pub fn content_hash(path: &Path) -> Result<String> {
    let data = std::fs::read(path)?;
    let digest = Sha256::digest(&data);
    Ok(digest.iter().map(|b| format!("{b:02x}")).collect())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::control::ControlVariate;

    #[test]
    fn round_trip() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("g.bin");
        let meta = GridMeta {
            beta: 2.0,
            gamma: 0.1,
            potential: "cosine".into(),
            source: CvSource::Underdamped,
        };
        let g = GridCV::from_fn(8, 6, 3.0, meta.clone(), |q, p| (q * p, q.cos()))
            .unwrap()
            .with_d_psi(0.75);
        write_grid(&path, &g).unwrap();
        let h = read_grid(&path).unwrap();
        assert_eq!(h.meta(), &meta);
        assert_eq!(h.psi_values(), g.psi_values());
        assert_eq!(h.dpsi_values(), g.dpsi_values());
        assert_eq!(ControlVariate::<1>::d_psi(&h), 0.75);
        let hash = content_hash(&path).unwrap();
        assert_eq!(hash.len(), 64);
        write_grid(&path, &h).unwrap();
        assert_eq!(content_hash(&path).unwrap(), hash);
    }

    #[test]
    fn rejects_garbage_and_truncation() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("bad.bin");
        std::fs::write(&path, b"not a grid").unwrap();
        assert!(read_grid(&path).is_err());
        let meta = GridMeta {
            beta: 1.0,
            gamma: 1.0,
            potential: "zero".into(),
            source: CvSource::Galerkin,
        };
        let g = GridCV::from_fn(4, 4, 1.0, meta, |_, _| (0.0, 0.0))
            .unwrap()
            .with_d_psi(0.0);
        write_grid(&path, &g).unwrap();
        let bytes = std::fs::read(&path).unwrap();
        std::fs::write(&path, &bytes[..bytes.len() - 3]).unwrap();
        assert!(matches!(read_grid(&path), Err(Error::Format(_))));
    }

    #[test]
    fn gle_round_trip() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("gle.bin");
        let g = GleGridCV::from_fn((4, 3, 5), 2.0, 3.0, 1.0, 2.0, "cosine".into(), |q, p, z| {
            (q + p * z, p)
        })
        .unwrap()
        .with_d_psi(0.5);
        write_gle_grid(&path, &g).unwrap();
        let h = read_gle_grid(&path).unwrap();
        assert_eq!(h.psi_values(), g.psi_values());
        assert_eq!(h.dims(), (4, 3, 5));
        assert!(read_grid(&path).is_err());
    }
}
