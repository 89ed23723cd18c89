//! Replica runners: sample initial conditions at equilibrium, integrate,
//! and record displacement and control-variate values at snapshot times.
//!
//! Replicas run in parallel but are folded in index order, so results do
//! not depend on the number of worker threads.

use rayon::prelude::*;

use crate::control::{ControlVariate, GleControlVariate};
use crate::error::{ensure_positive, invalid, Error, Result};
use crate::estimators::{aggregate, xi_increment, EstimatorSeries, ReplicaOutcome};
use crate::integrators::{GlaIntegrator, GleIntegrator};
use crate::potential::Potential;
use crate::sampling::{replica_rng, StationarySampler};

/// Monte Carlo settings shared by all dynamics.
#[derive(Clone, Debug, PartialEq)]
pub struct RunSettings {
    pub dt: f64,
    /// Increasing snapshot times; the last one is the final time `T`.
    pub snapshots: Vec<f64>,
    pub replicas: usize,
    pub seed: u64,
    /// Coordinate whose displacement is recorded.
    pub axis: usize,
}

impl RunSettings {
    /// Snapshot step indices, rounded to the time grid.
    pub fn snapshot_steps(&self) -> Result<Vec<u64>> {
        ensure_positive("dt", self.dt)?;
        if self.snapshots.is_empty() {
            return Err(invalid("at least one snapshot time is required"));
        }
        if self.replicas < 2 {
            return Err(invalid("at least two replicas are required"));
        }
        let steps: Vec<u64> = self
            .snapshots
            .iter()
            .map(|t| (t / self.dt).round() as u64)
            .collect();
        if steps[0] == 0 || steps.windows(2).any(|w| w[0] >= w[1]) {
            return Err(invalid(
                "snapshot times must be positive, increasing and at least one step apart",
            ));
        }
        Ok(steps)
    }

    /// Snapshot times as actually realised on the step grid.
    pub fn realised_times(&self) -> Result<Vec<f64>> {
        Ok(self
            .snapshot_steps()?
            .iter()
            .map(|&n| n as f64 * self.dt)
            .collect())
    }
}

/// Run `f` inside a pool with the given number of threads (`None` uses the
/// global default).
pub fn with_workers<T: Send>(workers: Option<usize>, f: impl FnOnce() -> T + Send) -> Result<T> {
    match workers {
        None => Ok(f()),
        Some(n) => {
            let pool = rayon::ThreadPoolBuilder::new()
                .num_threads(n.max(1))
                .build()
                .map_err(|e| Error::InvalidArgument(format!("cannot build worker pool: {e}")))?;
            Ok(pool.install(f))
        }
    }
}

fn collect_outcomes(
    replicas: usize,
    run: impl Fn(usize) -> Result<ReplicaOutcome> + Sync + Send,
) -> Result<Vec<ReplicaOutcome>> {
    (0..replicas).into_par_iter().map(&run).collect()
}

/// One replica of the Langevin dynamics.
pub fn langevin_replica<P, C, const D: usize>(
    integrator: &GlaIntegrator<P>,
    sampler: &StationarySampler<P>,
    cv: &C,
    settings: &RunSettings,
    steps: &[u64],
    replica: usize,
) -> Result<ReplicaOutcome>
where
    P: Potential<D>,
    C: ControlVariate<D>,
{
    let axis = settings.axis;
    if axis >= D {
        return Err(invalid(format!(
            "axis {axis} out of range for dimension {D}"
        )));
    }
    let mut rng = replica_rng(settings.seed, replica as u64);
    let (q0, p0) = sampler.sample_phase::<_, D>(&mut rng);
    let mut state = integrator.init_state(q0, p0);
    let psi0 = if C::IS_ZERO { 0.0 } else { cv.value(&q0, &p0) };
    let scale = integrator.noise_scale();
    let mut integral = 0.0;
    let mut out = ReplicaOutcome {
        displacement: Vec::with_capacity(steps.len()),
        xi: Vec::with_capacity(steps.len()),
    };
    let mut n = 0u64;
    for &target in steps {
        while n < target {
            n += 1;
            if C::IS_ZERO {
                integrator.checked_step(&mut state, &mut rng, replica, n)?;
            } else {
                let grad = cv.grad_p(&state.q, &state.p);
                let g_tilde = integrator.checked_step(&mut state, &mut rng, replica, n)?;
                integral += xi_increment(scale, &grad, &g_tilde);
            }
        }
        out.displacement.push(state.q_unwrapped[axis] - q0[axis]);
        let xi = if C::IS_ZERO {
            0.0
        } else {
            psi0 - cv.value(&state.q, &state.p) + integral
        };
        out.xi.push(xi);
    }
    Ok(out)
}

/// Run all replicas of the Langevin dynamics and aggregate.
pub fn run_langevin<P, C, const D: usize>(
    integrator: &GlaIntegrator<P>,
    sampler: &StationarySampler<P>,
    cv: &C,
    settings: &RunSettings,
) -> Result<EstimatorSeries>
where
    P: Potential<D>,
    C: ControlVariate<D>,
{
    let steps = settings.snapshot_steps()?;
    let outcomes = collect_outcomes(settings.replicas, |j| {
        langevin_replica(integrator, sampler, cv, settings, &steps, j)
    })?;
    aggregate(&outcomes, &settings.realised_times()?, cv.d_psi())
}

/// One replica of the generalized dynamics with auxiliary variable.
pub fn gle_replica<P, C>(
    integrator: &GleIntegrator<P>,
    sampler: &StationarySampler<P>,
    cv: &C,
    settings: &RunSettings,
    steps: &[u64],
    replica: usize,
) -> Result<ReplicaOutcome>
where
    P: Potential<1>,
    C: GleControlVariate,
{
    let mut rng = replica_rng(settings.seed, replica as u64);
    let (q0, p0, z0) = sampler.sample_extended(&mut rng);
    let mut state = integrator.init_state(q0, p0, z0);
    let psi0 = if C::IS_ZERO {
        0.0
    } else {
        cv.value(q0, p0, z0)
    };
    let scale = integrator.noise_amplitude();
    let mut integral = 0.0;
    let mut out = ReplicaOutcome::default();
    let mut n = 0u64;
    for &target in steps {
        while n < target {
            n += 1;
            if C::IS_ZERO {
                integrator.checked_step(&mut state, &mut rng, replica, n)?;
            } else {
                let grad = cv.grad_z(state.q, state.p, state.z);
                let dw = integrator.checked_step(&mut state, &mut rng, replica, n)?;
                integral += scale * grad * dw;
            }
        }
        out.displacement.push(state.q_unwrapped - q0);
        let xi = if C::IS_ZERO {
            0.0
        } else {
            psi0 - cv.value(state.q, state.p, state.z) + integral
        };
        out.xi.push(xi);
    }
    Ok(out)
}

pub fn run_gle<P, C>(
    integrator: &GleIntegrator<P>,
    sampler: &StationarySampler<P>,
    cv: &C,
    settings: &RunSettings,
) -> Result<EstimatorSeries>
where
    P: Potential<1>,
    C: GleControlVariate,
{
    if settings.axis != 0 {
        return Err(invalid("the generalized dynamics is one-dimensional"));
    }
    let steps = settings.snapshot_steps()?;
    let outcomes = collect_outcomes(settings.replicas, |j| {
        gle_replica(integrator, sampler, cv, settings, &steps, j)
    })?;
    aggregate(&outcomes, &settings.realised_times()?, cv.d_psi())
}
