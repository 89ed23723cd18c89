//! CSV tables written by sweeps and read back by the fit and plot tools.
//!
//! Lines starting with `#` are comments; they carry the configuration and
//! the control-variate hash. The first other line is the header.

use std::fmt::Write as _;
use std::path::Path;

use crate::error::{Error, Result};
use crate::estimators::EstimatorSeries;

pub const SERIES_HEADER: &str =
    "time,mean_u,std_u,mean_v,std_v,ci_halfwidth_u,ci_halfwidth_v,J,gamma,beta,delta,d_psi,cv_source,seed";
pub const SUMMARY_HEADER: &str =
    "gamma,delta,axis,D_hat,std,relstd,stderr,J,t_final,cv_source,cv_hash,status";

/// Prefix every line of `text` with `# `.
pub fn comment_block(text: &str) -> String {
    let mut s = String::new();
    for line in text.lines() {
        let _ = writeln!(s, "# {line}");
    }
    s
}

/// Identification of one sweep cell as written to the series table.
#[derive(Clone, Debug, PartialEq)]
pub struct SeriesLabel {
    pub gamma: f64,
    pub beta: f64,
    pub delta: f64,
    pub cv_source: String,
    pub seed: u64,
    /// Whether the `v` columns are meaningful.
    pub has_cv: bool,
}

/// Render a series table. `preamble` is emitted verbatim before the header.
pub fn series_csv(preamble: &str, label: &SeriesLabel, series: &EstimatorSeries) -> String {
    let mut s = String::from(preamble);
    s.push_str(SERIES_HEADER);
    s.push('\n');
    for k in 0..series.times.len() {
        let v_cols = if label.has_cv {
            format!("{},{},", series.mean_v(k), series.std_v(k))
        } else {
            ",,".to_string()
        };
        let v_ci = if label.has_cv {
            series.ci_halfwidth_v(k).to_string()
        } else {
            String::new()
        };
        let _ = writeln!(
            s,
            "{},{},{},{}{},{},{},{},{},{},{},{},{}",
            series.times[k],
            series.mean_u(k),
            series.std_u(k),
            v_cols,
            series.ci_halfwidth_u(k),
            v_ci,
            series.replicas,
            label.gamma,
            label.beta,
            label.delta,
            series.d_psi,
            label.cv_source,
            label.seed
        );
    }
    s
}

/// A row of the per-sweep summary.
#[derive(Clone, Debug, PartialEq)]
pub struct SummaryRow {
    pub gamma: f64,
    pub delta: f64,
    pub axis: usize,
    /// `NaN` for failed cells.
    pub d_hat: f64,
    pub std: f64,
    pub relstd: f64,
    pub stderr: f64,
    pub replicas: usize,
    pub t_final: f64,
    pub cv_source: String,
    pub cv_hash: String,
    /// `ok` or an error message.
    pub status: String,
}

impl SummaryRow {
    pub fn is_ok(&self) -> bool {
        self.status == "ok"
    }
}

fn opt(x: f64) -> String {
    if x.is_nan() {
        String::new()
    } else {
        x.to_string()
    }
}

fn sanitize(s: &str) -> String {
    s.replace([',', '\n', '\r'], ";")
}

pub fn summary_csv(preamble: &str, rows: &[SummaryRow]) -> String {
    let mut s = String::from(preamble);
    s.push_str(SUMMARY_HEADER);
    s.push('\n');
    for r in rows {
        let _ = writeln!(
            s,
            "{},{},{},{},{},{},{},{},{},{},{},{}",
            r.gamma,
            r.delta,
            r.axis,
            opt(r.d_hat),
            opt(r.std),
            opt(r.relstd),
            opt(r.stderr),
            r.replicas,
            r.t_final,
            sanitize(&r.cv_source),
            sanitize(&r.cv_hash),
            sanitize(&r.status)
        );
    }
    s
}

/// A parsed CSV: header names and string cells.
#[derive(Clone, Debug, PartialEq)]
pub struct Table {
    pub header: Vec<String>,
    pub rows: Vec<Vec<String>>,
}

impl Table {
    pub fn parse(text: &str) -> Result<Self> {
        let mut lines = text
            .lines()
            .filter(|l| !l.starts_with('#') && !l.trim().is_empty());
        let header: Vec<String> = lines
            .next()
            .ok_or_else(|| Error::Format("table has no header".into()))?
            .split(',')
            .map(|s| s.trim().to_string())
            .collect();
        let mut rows = Vec::new();
        for (n, line) in lines.enumerate() {
            let row: Vec<String> = line.split(',').map(|s| s.trim().to_string()).collect();
            if row.len() != header.len() {
                return Err(Error::Format(format!(
                    "row {} has {} fields, header has {}",
                    n + 1,
                    row.len(),
                    header.len()
                )));
            }
            rows.push(row);
        }
        Ok(Self { header, rows })
    }

    pub fn read(path: &Path) -> Result<Self> {
        Self::parse(&std::fs::read_to_string(path)?)
    }

    pub fn column(&self, name: &str) -> Result<usize> {
        self.header
            .iter()
            .position(|h| h == name)
            .ok_or_else(|| Error::Format(format!("missing column '{name}'")))
    }

    /// Numeric column; empty cells become `NaN`.
    pub fn numbers(&self, name: &str) -> Result<Vec<f64>> {
        let c = self.column(name)?;
        self.rows
            .iter()
            .map(|r| {
                let cell = &r[c];
                if cell.is_empty() {
                    Ok(f64::NAN)
                } else {
                    cell.parse().map_err(|_| {
                        Error::Format(format!("bad number '{cell}' in column '{name}'"))
                    })
                }
            })
            .collect()
    }
}

/// Parse a summary table.
pub fn parse_summary(text: &str) -> Result<Vec<SummaryRow>> {
    let t = Table::parse(text)?;
    let gamma = t.numbers("gamma")?;
    let delta = t.numbers("delta")?;
    let axis = t.numbers("axis")?;
    let d_hat = t.numbers("D_hat")?;
    let std = t.numbers("std")?;
    let relstd = t.numbers("relstd")?;
    let stderr = t.numbers("stderr")?;
    let reps = t.numbers("J")?;
    let t_final = t.numbers("t_final")?;
    let (cs, ch, st) = (
        t.column("cv_source")?,
        t.column("cv_hash")?,
        t.column("status")?,
    );
    Ok((0..t.rows.len())
        .map(|k| SummaryRow {
            gamma: gamma[k],
            delta: delta[k],
            axis: axis[k] as usize,
            d_hat: d_hat[k],
            std: std[k],
            relstd: relstd[k],
            stderr: stderr[k],
            replicas: reps[k] as usize,
            t_final: t_final[k],
            cv_source: t.rows[k][cs].clone(),
            cv_hash: t.rows[k][ch].clone(),
            status: t.rows[k][st].clone(),
        })
        .collect())
}
