use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{bail, Context};
use clap::{Args, Parser, Subcommand};
use log::{info, warn};

use mobility_core::experiment::{
    diffusion_plot, fit_scaling, parse_summary, run_cell, run_sweep, series_plot, CvCache,
    ExperimentConfig, Table, DEFAULT_CUTOFF,
};
use mobility_core::grid::{content_hash, write_grid};
use mobility_core::spectral::{solve_poisson, SolverChoice, SolverOptions, SpectralBasis};
use mobility_core::{PotentialChoice, UnderdampedProfile};

#[derive(Parser)]
#[command(
    name = "mobility",
    version,
    about = "Monte Carlo estimation of diffusion coefficients for Langevin dynamics"
)]
struct Cli {
    /// Worker threads for replica-level parallelism.
    #[arg(long, global = true, env = "MOBILITY_WORKERS")]
    workers: Option<usize>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Solve the Poisson equation by spectral Galerkin and cache the tabulated solution.
    SolvePoisson(GridArgs),
    /// Build the small-friction profile and cache `phi0 / gamma` on a grid.
    BuildUnderdamped(GridArgs),
    /// Run one (gamma, delta) cell.
    Run(RunArgs),
    /// Run every cell of a configuration.
    Sweep(RunArgs),
    /// Fit the power law of D against gamma from a summary table.
    Fit {
        summary: PathBuf,
        #[arg(long, default_value_t = DEFAULT_CUTOFF)]
        cutoff: f64,
    },
    /// Render SVG figures from a summary or series table.
    Plot {
        input: PathBuf,
        #[arg(long, short)]
        out: Option<PathBuf>,
        #[arg(long, default_value_t = DEFAULT_CUTOFF)]
        cutoff: f64,
    },
}

#[derive(Args)]
struct GridArgs {
    #[arg(long, default_value = "cosine")]
    potential: String,
    #[arg(long, default_value_t = 1.0)]
    stiffness: f64,
    #[arg(long, default_value_t = 1.0)]
    beta: f64,
    #[arg(long)]
    gamma: f64,
    /// Spectral truncation (`solve-poisson` only).
    #[arg(long, default_value_t = 60)]
    n: usize,
    /// Hermite scale in units of 1/sqrt(beta) (`solve-poisson` only).
    #[arg(long, default_value_t = 0.5)]
    sigma: f64,
    /// Force the dense or the iterative solver (`solve-poisson` only).
    #[arg(long, value_parser = ["auto", "dense", "iterative"], default_value = "auto")]
    solver: String,
    #[arg(long, default_value_t = 128)]
    nq: usize,
    #[arg(long, default_value_t = 192)]
    np: usize,
    /// Momentum half-width in units of 1/sqrt(beta).
    #[arg(long, default_value_t = 9.0)]
    lp: f64,
    #[arg(long, short)]
    out: PathBuf,
}

#[derive(Args)]
struct RunArgs {
    /// `key = value` configuration file.
    config: Option<PathBuf>,
    /// Overrides as `--key value` or `--key=value`, for any configuration key.
    #[arg(trailing_var_arg = true, allow_hyphen_values = true)]
    overrides: Vec<String>,
}

fn parse_overrides(args: &[String]) -> anyhow::Result<Vec<(String, String)>> {
    let mut out = Vec::new();
    let mut it = args.iter();
    while let Some(a) = it.next() {
        let Some(flag) = a.strip_prefix("--") else {
            bail!("expected a --key override, got '{a}'");
        };
        let (k, v) = match flag.split_once('=') {
            Some((k, v)) => (k.to_string(), v.to_string()),
            None => {
                let v = it
                    .next()
                    .with_context(|| format!("missing value for --{flag}"))?;
                (flag.to_string(), v.clone())
            }
        };
        out.push((k.replace('-', "_"), v));
    }
    Ok(out)
}

fn load_config(args: &RunArgs) -> anyhow::Result<ExperimentConfig> {
    let mut cfg = match &args.config {
        Some(p) => {
            let text =
                std::fs::read_to_string(p).with_context(|| format!("reading {}", p.display()))?;
            ExperimentConfig::parse(&text)?
        }
        None => ExperimentConfig::default(),
    };
    let overrides = parse_overrides(&args.overrides)?;
    if let Some((_, p)) = overrides.iter().rev().find(|(k, _)| k == "preset") {
        cfg.apply_preset(p)?;
    }
    for (k, v) in overrides.iter().filter(|(k, _)| k != "preset") {
        cfg.set(k, v)?;
    }
    cfg.validate()?;
    Ok(cfg)
}

fn one_dimensional(args: &GridArgs) -> anyhow::Result<mobility_core::Potential1D> {
    match PotentialChoice::from_name(&args.potential, args.stiffness, 0.0)? {
        PotentialChoice::One(p) => Ok(p),
        PotentialChoice::Two(_) => bail!(
            "'{}' is two-dimensional; grids are tabulated in one dimension",
            args.potential
        ),
    }
}

fn store(grid: &mobility_core::GridCV, out: &Path) -> anyhow::Result<()> {
    if let Some(dir) = out.parent().filter(|d| !d.as_os_str().is_empty()) {
        std::fs::create_dir_all(dir)?;
    }
    write_grid(out, grid)?;
    println!(
        "grid {}x{} written to {}",
        grid.nq(),
        grid.np(),
        out.display()
    );
    println!(
        "d_psi = {}",
        mobility_core::control::ControlVariate::<1>::d_psi(grid)
    );
    println!("sha256 = {}", content_hash(out)?);
    Ok(())
}

fn solve_poisson_cmd(args: &GridArgs) -> anyhow::Result<()> {
    let pot = one_dimensional(args)?;
    let scale = 1.0 / args.beta.sqrt();
    let basis = SpectralBasis::new(args.n, args.sigma * scale, args.beta, args.gamma)?;
    let choice = match args.solver.as_str() {
        "dense" => SolverChoice::Dense,
        "iterative" => SolverChoice::Iterative,
        _ => SolverChoice::Auto,
    };
    let sol = solve_poisson(
        &basis,
        &pot,
        &SolverOptions {
            choice,
            ..Default::default()
        },
    )?;
    println!("method = {}", sol.method);
    println!(
        "residual = {:e} (rhs norm {:e})",
        sol.residual_norm, sol.rhs_norm
    );
    if let Some(c) = sol.condition_estimate {
        println!("condition estimate = {c:e}");
    }
    println!("D_galerkin = {}", sol.diffusion());
    store(
        &sol.export_to_grid(args.nq, args.np, args.lp * scale)?,
        &args.out,
    )
}

fn build_underdamped_cmd(args: &GridArgs) -> anyhow::Result<()> {
    let pot = one_dimensional(args)?;
    let prof = UnderdampedProfile::build_default(&pot, args.beta)?;
    let d_und = prof.limiting_diffusion(args.beta)?;
    println!("profile nodes = {}", prof.node_count());
    println!("D_und = {d_und}");
    println!("D_und / gamma = {}", d_und / args.gamma);
    let grid = prof.to_grid(
        args.nq,
        args.np,
        args.lp / args.beta.sqrt(),
        args.gamma,
        args.beta,
    )?;
    store(&grid, &args.out)
}

fn run_cmd(args: &RunArgs, workers: Option<usize>) -> anyhow::Result<bool> {
    let cfg = load_config(args)?;
    if cfg.gamma.len() != 1 || cfg.delta.len() != 1 {
        bail!("`run` takes exactly one gamma and one delta; use `sweep` for lists");
    }
    std::fs::create_dir_all(&cfg.output)?;
    let cell = run_cell(
        &cfg,
        cfg.gamma[0],
        cfg.delta[0],
        workers,
        &mut CvCache::default(),
    );
    let row = cell.summary_row(cfg.axis, cfg.replicas);
    match &cell.series {
        Ok(_) => {
            println!(
                "D_hat = {} +/- {} (std {}, relstd {})",
                row.d_hat,
                3.0 * row.stderr,
                row.std,
                row.relstd
            );
            if let Some(p) = &cell.series_path {
                println!("series written to {}", p.display());
            }
            Ok(true)
        }
        Err(e) => {
            eprintln!("cell failed: {e}");
            Ok(false)
        }
    }
}

fn sweep_cmd(args: &RunArgs, workers: Option<usize>) -> anyhow::Result<bool> {
    let cfg = load_config(args)?;
    let report = run_sweep(&cfg, workers)?;
    for r in &report.rows {
        println!(
            "gamma={} delta={} D_hat={} relstd={} {}",
            r.gamma, r.delta, r.d_hat, r.relstd, r.status
        );
    }
    println!("summary written to {}", report.summary_path.display());
    Ok(report.all_ok())
}

fn fit_cmd(summary: &Path, cutoff: f64) -> anyhow::Result<()> {
    let rows = parse_summary(&std::fs::read_to_string(summary)?)?;
    let mut groups: Vec<(f64, usize)> = Vec::new();
    for r in &rows {
        if !groups.contains(&(r.delta, r.axis)) {
            groups.push((r.delta, r.axis));
        }
    }
    let mut any = false;
    for g in groups {
        let pts: Vec<(f64, f64)> = rows
            .iter()
            .filter(|r| (r.delta, r.axis) == g && r.is_ok())
            .map(|r| (r.gamma, r.d_hat))
            .collect();
        match fit_scaling(&pts, cutoff) {
            Ok(fit) => {
                any = true;
                println!(
                    "delta={} axis={}: exponent = {:.6} +/- {:.6} ({} points)",
                    g.0, g.1, fit.exponent, fit.stderr, fit.points
                );
            }
            Err(e) => warn!("delta={} axis={}: {e}", g.0, g.1),
        }
    }
    if !any {
        bail!("no group had enough points with gamma <= {cutoff}");
    }
    Ok(())
}

fn plot_cmd(input: &Path, out: Option<&Path>, cutoff: f64) -> anyhow::Result<()> {
    let text =
        std::fs::read_to_string(input).with_context(|| format!("reading {}", input.display()))?;
    let table = Table::parse(&text)?;
    let svg = if table.column("D_hat").is_ok() {
        diffusion_plot(&parse_summary(&text)?, cutoff)?.0
    } else {
        let title = input
            .file_stem()
            .map(|s| s.to_string_lossy().into_owned())
            .unwrap_or_default();
        series_plot(&table, &title)?
    };
    let out = out
        .map(Path::to_path_buf)
        .unwrap_or_else(|| input.with_extension("svg"));
    std::fs::write(&out, svg)?;
    info!("wrote {}", out.display());
    println!("{}", out.display());
    Ok(())
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("info")).init();
    let cli = Cli::parse();
    let workers = cli.workers;
    let result = match &cli.command {
        Command::SolvePoisson(a) => solve_poisson_cmd(a).map(|_| true),
        Command::BuildUnderdamped(a) => build_underdamped_cmd(a).map(|_| true),
        Command::Run(a) => run_cmd(a, workers),
        Command::Sweep(a) => sweep_cmd(a, workers),
        Command::Fit { summary, cutoff } => fit_cmd(summary, *cutoff).map(|_| true),
        Command::Plot { input, out, cutoff } => {
            plot_cmd(input, out.as_deref(), *cutoff).map(|_| true)
        }
    };
    match result {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::FAILURE,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::FAILURE
        }
    }
}
