use rand::Rng;

use super::noise::NoisePairCovariance;
use crate::error::{ensure_positive, Error, Result};
use crate::potential::{wrap_angle, Potential};

/// Phase-space state of one replica.
#[derive(Clone, Copy, Debug)]
pub struct ReplicaState<const D: usize> {
    /// Position reduced to the fundamental cell (equal to `q_unwrapped` for
    /// non-periodic potentials).
    pub q: [f64; D],
    pub q_unwrapped: [f64; D],
    pub p: [f64; D],
    /// `-grad V(q)`, cached between steps.
    pub force: [f64; D],
}

/// Splitting scheme: half kick, drift, half kick, then an exact
/// Ornstein-Uhlenbeck update of the momentum.
#[derive(Clone, Debug)]
pub struct GlaIntegrator<P> {
    potential: P,
    gamma: f64,
    beta: f64,
    dt: f64,
    decay: f64,
    noise_scale: f64,
    noise: NoisePairCovariance,
    periodic: bool,
}

impl<P> GlaIntegrator<P> {
    pub fn new<const D: usize>(potential: P, gamma: f64, beta: f64, dt: f64) -> Result<Self>
    where
        P: Potential<D>,
    {
        ensure_positive("beta", beta)?;
        let noise = NoisePairCovariance::new(gamma, dt)?;
        let periodic = potential.is_periodic();
        Ok(Self {
            potential,
            gamma,
            beta,
            dt,
            decay: (-gamma * dt).exp(),
            noise_scale: (2.0 * gamma / beta).sqrt(),
            noise,
            periodic,
        })
    }

    pub fn gamma(&self) -> f64 {
        self.gamma
    }

    pub fn beta(&self) -> f64 {
        self.beta
    }

    pub fn dt(&self) -> f64 {
        self.dt
    }

    /// `sqrt(2 gamma / beta)`, the prefactor of the Brownian increments.
    pub fn noise_scale(&self) -> f64 {
        self.noise_scale
    }

    pub fn noise(&self) -> &NoisePairCovariance {
        &self.noise
    }

    pub fn potential(&self) -> &P {
        &self.potential
    }

    pub fn init_state<const D: usize>(&self, q: [f64; D], p: [f64; D]) -> ReplicaState<D>
    where
        P: Potential<D>,
    {
        let g = self.potential.gradient(&q);
        ReplicaState {
            q,
            q_unwrapped: q,
            p,
            force: g.map(|x| -x),
        }
    }

    /// Advance by one step with explicit noise. `g[k]` drives the momentum
    /// update and `g_tilde[k]` is the matching Brownian increment.
    #[inline]
    pub fn step_with_noise<const D: usize>(&self, s: &mut ReplicaState<D>, g: &[f64; D])
    where
        P: Potential<D>,
    {
        let half = 0.5 * self.dt;
        for k in 0..D {
            s.p[k] += half * s.force[k];
            let dq = self.dt * s.p[k];
            s.q_unwrapped[k] += dq;
            s.q[k] = if self.periodic {
                wrap_angle(s.q[k] + dq)
            } else {
                s.q_unwrapped[k]
            };
        }
        let grad = self.potential.gradient(&s.q);
        for k in 0..D {
            s.force[k] = -grad[k];
            s.p[k] += half * s.force[k];
            s.p[k] = self.decay * s.p[k] + self.noise_scale * g[k];
        }
    }

    /// Advance by one step, returning the Brownian increments `g_tilde`.
    #[inline]
    pub fn step<R: Rng + ?Sized, const D: usize>(
        &self,
        s: &mut ReplicaState<D>,
        rng: &mut R,
    ) -> [f64; D]
    where
        P: Potential<D>,
    {
        let mut g = [0.0; D];
        let mut g_tilde = [0.0; D];
        for k in 0..D {
            let (a, b) = self.noise.sample(rng);
            g[k] = a;
            g_tilde[k] = b;
        }
        self.step_with_noise(s, &g);
        g_tilde
    }

    /// Like [`step`](Self::step) but reports a non-finite state as an error.
    #[inline]
    pub fn checked_step<R: Rng + ?Sized, const D: usize>(
        &self,
        s: &mut ReplicaState<D>,
        rng: &mut R,
        replica: usize,
        step: u64,
    ) -> Result<[f64; D]>
    where
        P: Potential<D>,
    {
        let gt = self.step(s, rng);
        if s.p
            .iter()
            .chain(s.q_unwrapped.iter())
            .all(|x| x.is_finite())
        {
            Ok(gt)
        } else {
            Err(Error::Unstable { replica, step })
        }
    }
}
