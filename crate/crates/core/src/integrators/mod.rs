//! Time integrators for underdamped Langevin dynamics and its generalized
//! (auxiliary-variable) extension.

mod expm;
mod gla;
mod gle;
mod noise;

pub use expm::{expm2, expm2_taylor};
pub use gla::{GlaIntegrator, ReplicaState};
pub use gle::{GleIntegrator, GleState};
pub use noise::NoisePairCovariance;
