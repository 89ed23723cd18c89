//! Static SVG figures. Output depends only on the input numbers, so the same
//! table always renders to the same bytes.

use std::fmt::Write as _;

use super::fit::{fit_scaling, ScalingFit};
use super::output::{SummaryRow, Table};
use crate::error::{Error, Result};

const WIDTH: f64 = 640.0;
const HEIGHT: f64 = 440.0;
const LEFT: f64 = 72.0;
const RIGHT: f64 = 24.0;
const TOP: f64 = 24.0;
const BOTTOM: f64 = 56.0;
const COLORS: [&str; 6] = [
    "#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e", "#17becf",
];

struct Frame {
    x0: f64,
    x1: f64,
    y0: f64,
    y1: f64,
}

impl Frame {
    fn new(x: (f64, f64), y: (f64, f64)) -> Self {
        let pad = |lo: f64, hi: f64| {
            if hi > lo {
                (lo, hi)
            } else {
                (lo - 0.5, hi + 0.5)
            }
        };
        let (x0, x1) = pad(x.0, x.1);
        let (y0, y1) = pad(y.0, y.1);
        Self { x0, x1, y0, y1 }
    }
    fn px(&self, x: f64) -> f64 {
        LEFT + (x - self.x0) / (self.x1 - self.x0) * (WIDTH - LEFT - RIGHT)
    }
    fn py(&self, y: f64) -> f64 {
        HEIGHT - BOTTOM - (y - self.y0) / (self.y1 - self.y0) * (HEIGHT - TOP - BOTTOM)
    }
}

fn header(s: &mut String, title: &str) {
    let _ = writeln!(
        s,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{WIDTH}" height="{HEIGHT}" viewBox="0 0 {WIDTH} {HEIGHT}" font-family="sans-serif" font-size="12">"#
    );
    let _ = writeln!(
        s,
        r#"<rect width="{WIDTH}" height="{HEIGHT}" fill="white"/>"#
    );
    let _ = writeln!(
        s,
        r#"<text x="{:.1}" y="16" text-anchor="middle">{}</text>"#,
        WIDTH / 2.0,
        escape(title)
    );
}

fn escape(s: &str) -> String {
    s.replace('&', "&amp;")
        .replace('<', "&lt;")
        .replace('>', "&gt;")
}

fn axes(s: &mut String, xlabel: &str, ylabel: &str) {
    let (l, r, t, b) = (LEFT, WIDTH - RIGHT, TOP, HEIGHT - BOTTOM);
    let _ = writeln!(
        s,
        r#"<rect x="{l:.1}" y="{t:.1}" width="{:.1}" height="{:.1}" fill="none" stroke="black"/>"#,
        r - l,
        b - t
    );
    let _ = writeln!(
        s,
        r#"<text x="{:.1}" y="{:.1}" text-anchor="middle">{}</text>"#,
        (l + r) / 2.0,
        HEIGHT - 12.0,
        escape(xlabel)
    );
    let _ = writeln!(
        s,
        r#"<text x="16" y="{:.1}" text-anchor="middle" transform="rotate(-90 16 {:.1})">{}</text>"#,
        (t + b) / 2.0,
        (t + b) / 2.0,
        escape(ylabel)
    );
}

fn log_ticks(s: &mut String, f: &Frame, horizontal: bool) {
    let (lo, hi) = if horizontal {
        (f.x0, f.x1)
    } else {
        (f.y0, f.y1)
    };
    let mut k = lo.ceil() as i32;
    while (k as f64) <= hi {
        let label = format!("1e{k}");
        if horizontal {
            let x = f.px(k as f64);
            let _ = writeln!(
                s,
                r#"<line x1="{x:.2}" y1="{:.1}" x2="{x:.2}" y2="{:.1}" stroke="black"/>"#,
                HEIGHT - BOTTOM,
                HEIGHT - BOTTOM + 5.0
            );
            let _ = writeln!(
                s,
                r#"<text x="{x:.2}" y="{:.1}" text-anchor="middle">{label}</text>"#,
                HEIGHT - BOTTOM + 18.0
            );
        } else {
            let y = f.py(k as f64);
            let _ = writeln!(
                s,
                r#"<line x1="{:.1}" y1="{y:.2}" x2="{LEFT:.1}" y2="{y:.2}" stroke="black"/>"#,
                LEFT - 5.0
            );
            let _ = writeln!(
                s,
                r#"<text x="{:.1}" y="{:.2}" text-anchor="end">{label}</text>"#,
                LEFT - 8.0,
                y + 4.0
            );
        }
        k += 1;
    }
}

fn linear_ticks(s: &mut String, f: &Frame, horizontal: bool) {
    let (lo, hi) = if horizontal {
        (f.x0, f.x1)
    } else {
        (f.y0, f.y1)
    };
    let raw = (hi - lo) / 5.0;
    let mag = 10f64.powf(raw.log10().floor());
    let step = [1.0, 2.0, 5.0, 10.0]
        .iter()
        .map(|m| m * mag)
        .find(|st| *st >= raw)
        .unwrap_or(10.0 * mag);
    let mut k = (lo / step).ceil() as i64;
    while (k as f64) * step <= hi + 1e-9 * step {
        let v = k as f64 * step;
        let label = format!("{}", (v / step).round() * step);
        let label = if label.len() > 8 {
            format!("{v:.3e}")
        } else {
            label
        };
        if horizontal {
            let x = f.px(v);
            let _ = writeln!(
                s,
                r#"<line x1="{x:.2}" y1="{:.1}" x2="{x:.2}" y2="{:.1}" stroke="black"/>"#,
                HEIGHT - BOTTOM,
                HEIGHT - BOTTOM + 5.0
            );
            let _ = writeln!(
                s,
                r#"<text x="{x:.2}" y="{:.1}" text-anchor="middle">{label}</text>"#,
                HEIGHT - BOTTOM + 18.0
            );
        } else {
            let y = f.py(v);
            let _ = writeln!(
                s,
                r#"<line x1="{:.1}" y1="{y:.2}" x2="{LEFT:.1}" y2="{y:.2}" stroke="black"/>"#,
                LEFT - 5.0
            );
            let _ = writeln!(
                s,
                r#"<text x="{:.1}" y="{:.2}" text-anchor="end">{label}</text>"#,
                LEFT - 8.0,
                y + 4.0
            );
        }
        k += 1;
    }
}

fn range(values: impl Iterator<Item = f64>) -> Option<(f64, f64)> {
    values
        .filter(|v| v.is_finite())
        .fold(None, |acc, v| match acc {
            None => Some((v, v)),
            Some((lo, hi)) => Some((lo.min(v), hi.max(v))),
        })
}

fn legend(s: &mut String, entries: &[(String, &str, bool)]) {
    for (k, (label, color, dashed)) in entries.iter().enumerate() {
        let y = TOP + 16.0 + 16.0 * k as f64;
        let x = WIDTH - RIGHT - 150.0;
        let dash = if *dashed {
            r#" stroke-dasharray="6 4""#
        } else {
            ""
        };
        let _ = writeln!(
            s,
            r#"<line x1="{x:.1}" y1="{y:.1}" x2="{:.1}" y2="{y:.1}" stroke="{color}" stroke-width="2"{dash}/>"#,
            x + 24.0
        );
        let _ = writeln!(
            s,
            r#"<text x="{:.1}" y="{:.1}">{}</text>"#,
            x + 30.0,
            y + 4.0,
            escape(label)
        );
    }
}

/// Fit per `(delta, axis)` group.
pub type GroupFit = ((f64, usize), ScalingFit);

/// Log-log plot of `D_hat` against `gamma`, one colour per `(delta, axis)`
/// group, with a dashed fitted line wherever a fit over `gamma <= cutoff`
/// succeeds.
pub fn diffusion_plot(rows: &[SummaryRow], cutoff: f64) -> Result<(String, Vec<GroupFit>)> {
    let ok: Vec<&SummaryRow> = rows
        .iter()
        .filter(|r| r.is_ok() && r.d_hat > 0.0 && r.gamma > 0.0)
        .collect();
    if ok.is_empty() {
        return Err(Error::InvalidArgument("no plottable summary rows".into()));
    }
    let mut groups: Vec<(f64, usize)> = Vec::new();
    for r in &ok {
        if !groups.iter().any(|g| g.0 == r.delta && g.1 == r.axis) {
            groups.push((r.delta, r.axis));
        }
    }
    let mut fits = Vec::new();
    for &g in &groups {
        let pts: Vec<(f64, f64)> = ok
            .iter()
            .filter(|r| (r.delta, r.axis) == g)
            .map(|r| (r.gamma, r.d_hat))
            .collect();
        if let Ok(fit) = fit_scaling(&pts, cutoff) {
            fits.push((g, fit));
        }
    }
    let xr = range(ok.iter().map(|r| r.gamma.log10())).unwrap();
    let yr = range(ok.iter().flat_map(|r| {
        let lo = if r.d_hat > r.stderr * 3.0 {
            (r.d_hat - 3.0 * r.stderr).log10()
        } else {
            r.d_hat.log10()
        };
        [lo, (r.d_hat + 3.0 * r.stderr.max(0.0)).log10()]
    }))
    .unwrap();
    let f = Frame::new((xr.0.floor(), xr.1.ceil()), (yr.0.floor(), yr.1.ceil()));

    let mut s = String::new();
    header(&mut s, "Diffusion coefficient against friction");
    axes(&mut s, "gamma", "D");
    log_ticks(&mut s, &f, true);
    log_ticks(&mut s, &f, false);
    let mut entries = Vec::new();
    for (gi, g) in groups.iter().enumerate() {
        let color = COLORS[gi % COLORS.len()];
        entries.push((format!("delta={} axis={}", g.0, g.1), color, false));
        for r in ok.iter().filter(|r| (r.delta, r.axis) == *g) {
            let (x, y) = (f.px(r.gamma.log10()), f.py(r.d_hat.log10()));
            if r.stderr > 0.0 {
                let hi = f.py((r.d_hat + 3.0 * r.stderr).log10());
                let lo = if r.d_hat > 3.0 * r.stderr {
                    f.py((r.d_hat - 3.0 * r.stderr).log10())
                } else {
                    HEIGHT - BOTTOM
                };
                let _ = writeln!(
                    s,
                    r#"<line x1="{x:.2}" y1="{lo:.2}" x2="{x:.2}" y2="{hi:.2}" stroke="{color}"/>"#
                );
            }
            let _ = writeln!(
                s,
                r#"<circle cx="{x:.2}" cy="{y:.2}" r="3.5" fill="{color}"/>"#
            );
        }
        if let Some((_, fit)) = fits.iter().find(|(k, _)| k == g) {
            let gs: Vec<f64> = ok
                .iter()
                .filter(|r| (r.delta, r.axis) == *g && r.gamma <= cutoff)
                .map(|r| r.gamma)
                .collect();
            let (a, b) = range(gs.iter().map(|x| x.log10())).unwrap();
            let y = |lx: f64| f.py(fit.predict(10f64.powf(lx)).log10());
            let _ = writeln!(
                s,
                r#"<line x1="{:.2}" y1="{:.2}" x2="{:.2}" y2="{:.2}" stroke="{color}" stroke-dasharray="6 4"/>"#,
                f.px(a),
                y(a),
                f.px(b),
                y(b)
            );
            entries.push((
                format!("fit exponent {:.3} +/- {:.3}", fit.exponent, fit.stderr),
                color,
                true,
            ));
        }
    }
    legend(&mut s, &entries);
    s.push_str("</svg>\n");
    Ok((s, fits))
}

/// Time series of `mean_u` and `mean_v` with shaded `mean +/- 3 std` bands.
/// Without `v` values only `u` is drawn.
pub fn series_plot(table: &Table, title: &str) -> Result<String> {
    let t = table.numbers("time")?;
    let mu = table.numbers("mean_u")?;
    let su = table.numbers("std_u")?;
    let mv = table.numbers("mean_v")?;
    let sv = table.numbers("std_v")?;
    if t.is_empty() {
        return Err(Error::InvalidArgument("empty series".into()));
    }
    let has_v = mv.iter().chain(&sv).all(|x| x.is_finite());
    let band = |m: &[f64], sd: &[f64], sign: f64| {
        m.iter()
            .zip(sd)
            .map(|(a, b)| a + sign * 3.0 * b)
            .collect::<Vec<f64>>()
    };
    let mut series = vec![("u", &mu, &su, COLORS[0])];
    if has_v {
        series.push(("v", &mv, &sv, COLORS[4]));
    }
    let yr = range(series.iter().flat_map(|(_, m, sd, _)| {
        let lo = band(m, sd, -1.0);
        let hi = band(m, sd, 1.0);
        lo.into_iter().chain(hi)
    }))
    .ok_or_else(|| Error::InvalidArgument("series has no finite values".into()))?;
    let f = Frame::new((0.0, t.iter().cloned().fold(0.0, f64::max)), yr);

    let mut s = String::new();
    header(&mut s, title);
    axes(&mut s, "t", "estimator");
    linear_ticks(&mut s, &f, true);
    linear_ticks(&mut s, &f, false);
    let mut entries = Vec::new();
    for (name, m, sd, color) in &series {
        let hi = band(m, sd, 1.0);
        let lo = band(m, sd, -1.0);
        let mut pts = String::new();
        for (x, y) in t.iter().zip(&hi) {
            let _ = write!(pts, "{:.2},{:.2} ", f.px(*x), f.py(*y));
        }
        for (x, y) in t.iter().zip(&lo).rev() {
            let _ = write!(pts, "{:.2},{:.2} ", f.px(*x), f.py(*y));
        }
        let _ = writeln!(
            s,
            r#"<polygon points="{}" fill="{color}" fill-opacity="0.2" stroke="none"/>"#,
            pts.trim_end()
        );
        let mut line = String::new();
        for (x, y) in t.iter().zip(m.iter()) {
            let _ = write!(line, "{:.2},{:.2} ", f.px(*x), f.py(*y));
        }
        let _ = writeln!(
            s,
            r#"<polyline points="{}" fill="none" stroke="{color}" stroke-width="2"/>"#,
            line.trim_end()
        );
        entries.push((format!("{name}: mean +/- 3 std"), *color, false));
    }
    legend(&mut s, &entries);
    s.push_str("</svg>\n");
    Ok(s)
}
