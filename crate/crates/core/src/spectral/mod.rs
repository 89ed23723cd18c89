//! Fourier/Hermite Galerkin solver for the Poisson equation `-L phi = p` of
//! the one-dimensional Langevin generator.
//!
//! Functions are expanded in `e_ij = Z^{1/2} e^{beta H / 2} g_i(q) h_j(p)`,
//! which is orthonormal in `L^2(mu)`. The zero-mean condition is imposed
//! with a Lagrange multiplier, giving a bordered (saddle point) system.

mod assemble;
mod basis;
mod solve;
pub mod sparse;

pub use assemble::{assemble_factors, assemble_generator_matrix, OperatorFactors};
pub use basis::{hermite_with_derivative, trig_derivatives, trig_values, SpectralBasis};
pub use solve::{solve_poisson, SolverChoice, SolverOptions, SpectralSolution};
