//! Estimation of the mobility (effective diffusion coefficient) of
//! underdamped Langevin dynamics on the torus, with control variates built
//! from spectral Galerkin solutions, grid interpolation, or the
//! small-friction limit.

pub mod control;
pub mod error;
pub mod estimators;
pub mod experiment;
pub mod grid;
pub mod integrators;
pub mod potential;
pub mod quadrature;
pub mod sampling;
pub mod simulation;
pub mod spectral;
pub mod underdamped;

pub use error::{Error, Result};
pub use estimators::EstimatorSeries;
pub use experiment::{ExperimentConfig, SweepReport};
pub use grid::{GridCV, TensorizedCV};
pub use potential::{Potential, Potential1D, Potential2D, PotentialChoice};
pub use spectral::{SpectralBasis, SpectralSolution};
pub use underdamped::UnderdampedProfile;
