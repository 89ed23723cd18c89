//! Configuration-driven sweeps over the friction, with CSV tables, power-law
//! fits and SVG figures.

pub mod config;
pub mod fit;
pub mod output;
pub mod plot;
pub mod sweep;

pub use config::{CvKind, Dynamics, ExperimentConfig, TimeRule};
pub use fit::{fit_scaling, ScalingFit, DEFAULT_CUTOFF};
pub use output::{parse_summary, SummaryRow, Table};
pub use plot::{diffusion_plot, series_plot};
pub use sweep::{run_cell, run_sweep, CellOutcome, CvCache, SweepReport};
