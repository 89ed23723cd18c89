//! Sequential loop over `(gamma, delta)` cells. Each cell builds or loads
//! its control variate, runs the replicas in parallel and writes a series
//! table; failures are recorded and the loop moves on.

use std::path::{Path, PathBuf};
use std::sync::Arc;
use std::time::Instant;

use super::config::{CvKind, Dynamics, ExperimentConfig};
use super::output::{comment_block, series_csv, summary_csv, SeriesLabel, SummaryRow};
use crate::control::{ControlVariate, GleControlVariate, LinearMomentum, NoControl};
use crate::error::{Error, Result};
use crate::estimators::EstimatorSeries;
use crate::grid::{content_hash, read_gle_grid, read_grid, write_grid, GridCV, TensorizedCV};
use crate::integrators::{GlaIntegrator, GleIntegrator};
use crate::potential::{Potential, Potential1D, Potential2D, PotentialChoice};
use crate::sampling::StationarySampler;
use crate::simulation::{run_gle, run_langevin, with_workers, RunSettings};
use crate::spectral::{solve_poisson, SolverOptions, SpectralBasis};
use crate::underdamped::UnderdampedProfile;

/// Result of one cell.
#[derive(Clone, Debug)]
pub struct CellOutcome {
    pub gamma: f64,
    pub delta: f64,
    pub t_final: f64,
    /// Whether the step cap shortened the run.
    pub capped: bool,
    pub cv_source: String,
    pub cv_hash: String,
    pub series: std::result::Result<EstimatorSeries, String>,
    pub series_path: Option<PathBuf>,
}

impl CellOutcome {
    pub fn summary_row(&self, axis: usize, replicas: usize) -> SummaryRow {
        match &self.series {
            Ok(s) => {
                let k = s.last();
                let (d, sd, se) = if self.cv_source == "none" {
                    (s.mean_u(k), s.std_u(k), s.u[k].stderr())
                } else {
                    (s.mean_v(k), s.std_v(k), s.v[k].stderr())
                };
                SummaryRow {
                    gamma: self.gamma,
                    delta: self.delta,
                    axis,
                    d_hat: d,
                    std: sd,
                    relstd: sd / d.abs(),
                    stderr: se,
                    replicas: s.replicas,
                    t_final: self.t_final,
                    cv_source: self.cv_source.clone(),
                    cv_hash: self.cv_hash.clone(),
                    status: "ok".into(),
                }
            }
            Err(e) => SummaryRow {
                gamma: self.gamma,
                delta: self.delta,
                axis,
                d_hat: f64::NAN,
                std: f64::NAN,
                relstd: f64::NAN,
                stderr: f64::NAN,
                replicas,
                t_final: self.t_final,
                cv_source: self.cv_source.clone(),
                cv_hash: self.cv_hash.clone(),
                status: format!("error: {e}"),
            },
        }
    }
}

#[derive(Clone, Debug)]
pub struct SweepReport {
    pub cells: Vec<CellOutcome>,
    pub rows: Vec<SummaryRow>,
    pub summary_path: PathBuf,
}

impl SweepReport {
    pub fn all_ok(&self) -> bool {
        self.cells.iter().all(|c| c.series.is_ok())
    }
}

/// Final time after applying the step cap.
pub fn capped_final_time(cfg: &ExperimentConfig, gamma: f64) -> (f64, bool) {
    let t = cfg.t_rule.final_time(gamma);
    let max_t = cfg.max_steps as f64 * cfg.dt;
    if t / cfg.dt > cfg.max_steps as f64 {
        log::warn!(
            "gamma = {gamma}: T = {t} needs {:.3e} steps, capping at {} steps (T = {max_t})",
            t / cfg.dt,
            cfg.max_steps
        );
        (max_t, true)
    } else {
        (t, false)
    }
}

/// Built control variate shared with the runner.
enum Built {
    None,
    Linear(LinearMomentum),
    Grid(Arc<GridCV>),
    Tensor(TensorizedCV),
    Gle(crate::grid::GleGridCV),
}

/// State kept across cells: the small-friction profile does not depend on
/// the friction and is built once.
#[derive(Default)]
pub struct CvCache {
    profile: Option<(Potential1D, f64, Arc<UnderdampedProfile>)>,
}

impl CvCache {
    fn profile(&mut self, potential: &Potential1D, beta: f64) -> Result<Arc<UnderdampedProfile>> {
        if let Some((p, b, prof)) = &self.profile {
            if p == potential && *b == beta {
                return Ok(prof.clone());
            }
        }
        let prof = Arc::new(UnderdampedProfile::build_default(potential, beta)?);
        self.profile = Some((*potential, beta, prof.clone()));
        Ok(prof)
    }
}

fn close(a: f64, b: f64) -> bool {
    (a - b).abs() <= 1e-12 * a.abs().max(b.abs())
}

/// One-dimensional grid for the given family.
fn build_grid(
    cfg: &ExperimentConfig,
    kind: CvKind,
    potential: &Potential1D,
    gamma: f64,
    cache: &mut CvCache,
) -> Result<GridCV> {
    let scale = 1.0 / cfg.beta.sqrt();
    let lp = cfg.grid_lp * scale;
    match kind {
        CvKind::Galerkin => {
            let basis =
                SpectralBasis::new(cfg.spectral_n, cfg.spectral_sigma * scale, cfg.beta, gamma)?;
            let sol = solve_poisson(&basis, potential, &SolverOptions::default())?;
            log::info!(
                "gamma = {gamma}: Galerkin estimate of D = {} ({})",
                sol.diffusion(),
                sol.method
            );
            sol.export_to_grid(cfg.grid_nq, cfg.grid_np, lp)
        }
        CvKind::Underdamped => {
            let prof = cache.profile(potential, cfg.beta)?;
            prof.to_grid(cfg.grid_nq, cfg.grid_np, lp, gamma, cfg.beta)
        }
        CvKind::File => {
            let path = cfg
                .cv_file
                .as_ref()
                .ok_or_else(|| Error::Config("cv_file is not set".into()))?;
            let grid = read_grid(path)?;
            let meta = grid.meta();
            if !close(meta.beta, cfg.beta) || !close(meta.gamma, gamma) {
                return Err(Error::Config(format!(
                    "{} was built for beta = {}, gamma = {}; cell has beta = {}, gamma = {gamma}",
                    path.display(),
                    meta.beta,
                    meta.gamma,
                    cfg.beta
                )));
            }
            Ok(grid)
        }
        _ => Err(Error::Config(format!(
            "'{}' is not a grid control variate",
            kind.as_str()
        ))),
    }
}

/// One-dimensional potential underlying a separable two-dimensional one.
fn separable_base(p: &Potential2D) -> Potential1D {
    match p {
        Potential2D::Zero => Potential1D::Zero,
        Potential2D::CoupledCosine { .. } => Potential1D::cosine(),
    }
}

fn cell_label(gamma: f64, delta: f64, axis: usize) -> String {
    format!("g{gamma}_d{delta}_a{axis}")
}

/// Persist a grid next to the outputs and return its hash.
fn store_grid(dir: &Path, label: &str, grid: &GridCV) -> Result<String> {
    let path = dir.join(format!("cv_{label}.bin"));
    write_grid(&path, grid)?;
    content_hash(&path)
}

fn build_cv(
    cfg: &ExperimentConfig,
    choice: &PotentialChoice,
    gamma: f64,
    label: &str,
    cache: &mut CvCache,
) -> Result<(Built, String)> {
    let dir = &cfg.output;
    match (cfg.cv, choice) {
        (CvKind::None, _) => Ok((Built::None, "none".into())),
        (CvKind::Linear, _) => Ok((
            Built::Linear(LinearMomentum {
                gamma,
                beta: cfg.beta,
                axis: cfg.axis,
            }),
            "analytic".into(),
        )),
        (CvKind::File, PotentialChoice::One(_)) if cfg.dynamics == Dynamics::Gle => {
            let path = cfg
                .cv_file
                .as_ref()
                .ok_or_else(|| Error::Config("cv_file is not set".into()))?;
            let grid = read_gle_grid(path)?;
            if !close(grid.beta, cfg.beta) || !close(grid.nu, cfg.nu) {
                return Err(Error::Config(format!(
                    "{} was built for beta = {}, nu = {}",
                    path.display(),
                    grid.beta,
                    grid.nu
                )));
            }
            Ok((Built::Gle(grid), content_hash(path)?))
        }
        (kind, PotentialChoice::One(p)) => {
            let grid = build_grid(cfg, kind, p, gamma, cache)?;
            let hash = if kind == CvKind::File {
                content_hash(cfg.cv_file.as_ref().unwrap())?
            } else {
                store_grid(dir, label, &grid)?
            };
            Ok((Built::Grid(Arc::new(grid)), hash))
        }
        (CvKind::Tensorized, PotentialChoice::Two(p2)) => {
            let base = separable_base(p2);
            let grid = build_grid(cfg, cfg.tensorized_base, &base, gamma, cache)?;
            let hash = if cfg.tensorized_base == CvKind::File {
                content_hash(cfg.cv_file.as_ref().unwrap())?
            } else {
                store_grid(dir, label, &grid)?
            };
            let cv = TensorizedCV::new(Arc::new(grid), cfg.axis, p2, gamma, cfg.beta)?;
            Ok((Built::Tensor(cv), hash))
        }
        (kind, _) => Err(Error::Config(format!(
            "control variate '{}' does not apply here",
            kind.as_str()
        ))),
    }
}

fn langevin<P, C, const D: usize>(
    potential: P,
    cfg: &ExperimentConfig,
    gamma: f64,
    cv: &C,
    settings: &RunSettings,
    workers: Option<usize>,
) -> Result<EstimatorSeries>
where
    P: Potential<D> + Clone,
    C: ControlVariate<D>,
{
    let integrator = GlaIntegrator::new::<D>(potential.clone(), gamma, cfg.beta, cfg.dt)?;
    let sampler = StationarySampler::new::<D>(potential, cfg.beta)?;
    with_workers(workers, || {
        run_langevin::<P, C, D>(&integrator, &sampler, cv, settings)
    })?
}

fn gle<C: GleControlVariate>(
    potential: Potential1D,
    cfg: &ExperimentConfig,
    gamma: f64,
    cv: &C,
    settings: &RunSettings,
    workers: Option<usize>,
) -> Result<EstimatorSeries> {
    let integrator = GleIntegrator::new(potential, gamma, cfg.nu, cfg.beta, cfg.dt)?;
    let sampler = StationarySampler::new::<1>(potential, cfg.beta)?;
    with_workers(workers, || run_gle(&integrator, &sampler, cv, settings))?
}

fn simulate(
    cfg: &ExperimentConfig,
    choice: &PotentialChoice,
    gamma: f64,
    built: &Built,
    settings: &RunSettings,
    workers: Option<usize>,
) -> Result<EstimatorSeries> {
    match (cfg.dynamics, choice, built) {
        (Dynamics::Gle, PotentialChoice::One(p), Built::None) => {
            gle(*p, cfg, gamma, &NoControl, settings, workers)
        }
        (Dynamics::Gle, PotentialChoice::One(p), Built::Gle(g)) => {
            gle(*p, cfg, gamma, g, settings, workers)
        }
        (Dynamics::Langevin1d, PotentialChoice::One(p), Built::None) => {
            langevin::<_, _, 1>(*p, cfg, gamma, &NoControl, settings, workers)
        }
        (Dynamics::Langevin1d, PotentialChoice::One(p), Built::Linear(c)) => {
            langevin::<_, _, 1>(*p, cfg, gamma, c, settings, workers)
        }
        (Dynamics::Langevin1d, PotentialChoice::One(p), Built::Grid(g)) => {
            langevin::<_, _, 1>(*p, cfg, gamma, g.as_ref(), settings, workers)
        }
        (Dynamics::Langevin2d, PotentialChoice::Two(p), Built::None) => {
            langevin::<_, _, 2>(*p, cfg, gamma, &NoControl, settings, workers)
        }
        (Dynamics::Langevin2d, PotentialChoice::Two(p), Built::Linear(c)) => {
            langevin::<_, _, 2>(*p, cfg, gamma, c, settings, workers)
        }
        (Dynamics::Langevin2d, PotentialChoice::Two(p), Built::Tensor(c)) => {
            langevin::<_, _, 2>(*p, cfg, gamma, c, settings, workers)
        }
        _ => Err(Error::Config(
            "dynamics, potential and control variate do not fit together".into(),
        )),
    }
}

/// Run a single `(gamma, delta)` cell and write its series table.
pub fn run_cell(
    cfg: &ExperimentConfig,
    gamma: f64,
    delta: f64,
    workers: Option<usize>,
    cache: &mut CvCache,
) -> CellOutcome {
    let (t_final, capped) = capped_final_time(cfg, gamma);
    let label = cell_label(gamma, delta, cfg.axis);
    let mut out = CellOutcome {
        gamma,
        delta,
        t_final,
        capped,
        cv_source: cfg.cv.as_str().to_string(),
        cv_hash: String::new(),
        series: Err(String::new()),
        series_path: None,
    };
    if cfg.cv == CvKind::Tensorized {
        out.cv_source = format!("tensorized({})", cfg.tensorized_base.as_str());
    }
    let result = (|| -> Result<(EstimatorSeries, PathBuf)> {
        let choice = PotentialChoice::from_name(&cfg.potential, cfg.stiffness, delta)?;
        let started = Instant::now();
        let (built, hash) = build_cv(cfg, &choice, gamma, &label, cache)?;
        out.cv_hash = hash;
        log::info!(
            "cell {label}: control variate ready in {:.2?}",
            started.elapsed()
        );
        let settings = RunSettings {
            dt: cfg.dt,
            snapshots: cfg.snapshots.iter().map(|f| f * t_final).collect(),
            replicas: cfg.replicas,
            seed: cfg.seed,
            axis: cfg.axis,
        };
        let started = Instant::now();
        let series = simulate(cfg, &choice, gamma, &built, &settings, workers)?;
        log::info!(
            "cell {label}: {} replicas in {:.2?}",
            cfg.replicas,
            started.elapsed()
        );
        let mut preamble = comment_block(&cfg.to_text());
        preamble.push_str(&comment_block(&format!(
            "cell = {label}\nt_final = {t_final}\nstep_cap_applied = {capped}\ncv_hash = {}",
            out.cv_hash
        )));
        let lbl = SeriesLabel {
            gamma,
            beta: cfg.beta,
            delta,
            cv_source: out.cv_source.clone(),
            seed: cfg.seed,
            has_cv: cfg.cv != CvKind::None,
        };
        let path = cfg.output.join(format!("series_{label}.csv"));
        std::fs::write(&path, series_csv(&preamble, &lbl, &series))?;
        Ok((series, path))
    })();
    match result {
        Ok((series, path)) => {
            out.series = Ok(series);
            out.series_path = Some(path);
        }
        Err(e) => {
            log::error!("cell {label} failed: {e}");
            out.series = Err(e.to_string());
        }
    }
    out
}

/// Run every cell of the configuration and write `summary.csv`.
pub fn run_sweep(cfg: &ExperimentConfig, workers: Option<usize>) -> Result<SweepReport> {
    cfg.validate()?;
    std::fs::create_dir_all(&cfg.output)?;
    let mut cache = CvCache::default();
    let mut cells = Vec::new();
    for &delta in &cfg.delta {
        for &gamma in &cfg.gamma {
            cells.push(run_cell(cfg, gamma, delta, workers, &mut cache));
        }
    }
    let rows: Vec<SummaryRow> = cells
        .iter()
        .map(|c| c.summary_row(cfg.axis, cfg.replicas))
        .collect();
    let summary_path = cfg.output.join(format!("summary_a{}.csv", cfg.axis));
    std::fs::write(
        &summary_path,
        summary_csv(&comment_block(&cfg.to_text()), &rows),
    )?;
    Ok(SweepReport {
        cells,
        rows,
        summary_path,
    })
}
