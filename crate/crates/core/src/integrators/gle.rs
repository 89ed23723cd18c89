use rand::Rng;
use rand_distr::StandardNormal;

use super::expm::expm2;
use crate::error::{ensure_positive, invalid, Error, Result};
use crate::potential::{wrap_angle, Potential};
use crate::quadrature::gauss_legendre;

/// State of one replica of the generalized dynamics with an auxiliary
/// variable `z` coupled to the momentum.
#[derive(Clone, Copy, Debug)]
pub struct GleState {
    pub q: f64,
    pub q_unwrapped: f64,
    pub p: f64,
    pub z: f64,
    pub force: f64,
}

/// Kick-drift-kick followed by an exact update of the linear `(p, z)`
/// subsystem
///
/// `dp = (sqrt(gamma)/nu) z dt`,
/// `dz = -(sqrt(gamma)/nu) p dt - z/nu^2 dt + sqrt(2/(beta nu^2)) dW`.
#[derive(Clone, Debug)]
pub struct GleIntegrator<P> {
    potential: P,
    gamma: f64,
    nu: f64,
    beta: f64,
    dt: f64,
    drift: [[f64; 2]; 2],
    propagator: [[f64; 2]; 2],
    /// Joint covariance of the stochastic convolution `(I_p, I_z)` and the
    /// Brownian increment `dW`.
    covariance: [[f64; 3]; 3],
    root: [[f64; 3]; 3],
    noise_amplitude: f64,
    periodic: bool,
}

impl<P> GleIntegrator<P> {
    /// `gamma` may be zero, which decouples `z` from the momentum.
    pub fn new(potential: P, gamma: f64, nu: f64, beta: f64, dt: f64) -> Result<Self>
    where
        P: Potential<1>,
    {
        if !(gamma.is_finite() && gamma >= 0.0) {
            return Err(invalid(format!("gamma must be non-negative, got {gamma}")));
        }
        ensure_positive("nu", nu)?;
        ensure_positive("beta", beta)?;
        ensure_positive("dt", dt)?;
        let kappa = gamma.sqrt() / nu;
        let drift = [[0.0, kappa], [-kappa, -1.0 / (nu * nu)]];
        let noise_amplitude = (2.0 / (beta * nu * nu)).sqrt();
        let propagator = expm2(drift, dt);

        let (nodes, weights) = gauss_legendre(51, 0.0, dt);
        let mut cov = [[0.0; 3]; 3];
        for (&s, &w) in nodes.iter().zip(&weights) {
            let e = expm2(drift, s);
            // e^{Ms} b with b = (0, c)
            let v = [e[0][1] * noise_amplitude, e[1][1] * noise_amplitude];
            cov[0][0] += w * v[0] * v[0];
            cov[0][1] += w * v[0] * v[1];
            cov[1][1] += w * v[1] * v[1];
            cov[0][2] += w * v[0];
            cov[1][2] += w * v[1];
        }
        cov[1][0] = cov[0][1];
        cov[2][0] = cov[0][2];
        cov[2][1] = cov[1][2];
        cov[2][2] = dt;
        let root = symmetric_sqrt3(&cov)?;
        let periodic = potential.is_periodic();
        Ok(Self {
            potential,
            gamma,
            nu,
            beta,
            dt,
            drift,
            propagator,
            covariance: cov,
            root,
            noise_amplitude,
            periodic,
        })
    }

    pub fn gamma(&self) -> f64 {
        self.gamma
    }
    pub fn nu(&self) -> f64 {
        self.nu
    }
    pub fn beta(&self) -> f64 {
        self.beta
    }
    pub fn dt(&self) -> f64 {
        self.dt
    }
    pub fn drift_matrix(&self) -> [[f64; 2]; 2] {
        self.drift
    }
    pub fn propagator(&self) -> [[f64; 2]; 2] {
        self.propagator
    }
    pub fn noise_covariance(&self) -> [[f64; 3]; 3] {
        self.covariance
    }
    /// `sqrt(2 / (beta nu^2))`, the prefactor of `dW` in the `z` equation.
    pub fn noise_amplitude(&self) -> f64 {
        self.noise_amplitude
    }

    pub fn init_state(&self, q: f64, p: f64, z: f64) -> GleState
    where
        P: Potential<1>,
    {
        GleState {
            q,
            q_unwrapped: q,
            p,
            z,
            force: -self.potential.gradient(&[q])[0],
        }
    }

    /// One step driven by three independent standard normals; returns the
    /// Brownian increment `dW` of the `z` equation.
    #[inline]
    pub fn step_with_normals(&self, s: &mut GleState, n: [f64; 3]) -> f64
    where
        P: Potential<1>,
    {
        let half = 0.5 * self.dt;
        s.p += half * s.force;
        let dq = self.dt * s.p;
        s.q_unwrapped += dq;
        s.q = if self.periodic {
            wrap_angle(s.q + dq)
        } else {
            s.q_unwrapped
        };
        s.force = -self.potential.gradient(&[s.q])[0];
        s.p += half * s.force;
        let r = &self.root;
        let noise = [
            r[0][0] * n[0] + r[0][1] * n[1] + r[0][2] * n[2],
            r[1][0] * n[0] + r[1][1] * n[1] + r[1][2] * n[2],
            r[2][0] * n[0] + r[2][1] * n[1] + r[2][2] * n[2],
        ];
        let e = &self.propagator;
        let (p, z) = (s.p, s.z);
        s.p = e[0][0] * p + e[0][1] * z + noise[0];
        s.z = e[1][0] * p + e[1][1] * z + noise[1];
        noise[2]
    }

    #[inline]
    pub fn step<R: Rng + ?Sized>(&self, s: &mut GleState, rng: &mut R) -> f64
    where
        P: Potential<1>,
    {
        let n = [
            rng.sample(StandardNormal),
            rng.sample(StandardNormal),
            rng.sample(StandardNormal),
        ];
        self.step_with_normals(s, n)
    }

    #[inline]
    pub fn checked_step<R: Rng + ?Sized>(
        &self,
        s: &mut GleState,
        rng: &mut R,
        replica: usize,
        step: u64,
    ) -> Result<f64>
    where
        P: Potential<1>,
    {
        let dw = self.step(s, rng);
        if s.p.is_finite() && s.z.is_finite() && s.q_unwrapped.is_finite() {
            Ok(dw)
        } else {
            Err(Error::Unstable { replica, step })
        }
    }
}

/// Symmetric positive semi-definite square root; negative round-off
/// eigenvalues are clamped to zero.
fn symmetric_sqrt3(c: &[[f64; 3]; 3]) -> Result<[[f64; 3]; 3]> {
    let m = faer::Mat::<f64>::from_fn(3, 3, |i, j| c[i][j]);
    let eig = m
        .self_adjoint_eigen(faer::Side::Lower)
        .map_err(|e| Error::Solver(format!("eigendecomposition failed: {e:?}")))?;
    let u = eig.U();
    let s = eig.S();
    let mut out = [[0.0; 3]; 3];
    for k in 0..3 {
        let l = s[k].max(0.0).sqrt();
        for i in 0..3 {
            for j in 0..3 {
                out[i][j] += u[(i, k)] * l * u[(j, k)];
            }
        }
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::potential::Potential1D;
    use crate::sampling::replica_rng;

    #[test]
    fn linear_block_preserves_equilibrium_covariance() {
        for &(gamma, nu, beta, dt) in &[
            (0.1, 2.0, 1.0, 0.01),
            (1.0, 0.5, 2.0, 0.1),
            (3.0, 1.0, 0.7, 0.05),
        ] {
            let gle = GleIntegrator::new(Potential1D::Zero, gamma, nu, beta, dt).unwrap();
            let e = gle.propagator();
            let c = gle.noise_covariance();
            let t = 1.0 / beta;
            for i in 0..2 {
                for j in 0..2 {
                    let v = t * (e[i][0] * e[j][0] + e[i][1] * e[j][1]) + c[i][j];
                    let want = if i == j { t } else { 0.0 };
                    assert!((v - want).abs() < 1e-13, "{gamma} {nu} entry {i}{j}: {v}");
                }
            }
        }
    }

    #[test]
    fn root_reproduces_covariance() {
        let gle = GleIntegrator::new(Potential1D::cosine(), 0.1, 2.0, 1.0, 0.01).unwrap();
        let c = gle.noise_covariance();
        let r = gle.root;
        for i in 0..3 {
            for j in 0..3 {
                let v: f64 = (0..3).map(|k| r[i][k] * r[k][j]).sum();
                assert!((v - c[i][j]).abs() < 1e-14);
            }
        }
    }

    #[test]
    fn decoupled_momentum_is_verlet() {
        // with gamma = 0 the (q, p) pair follows velocity Verlet exactly
        let v = Potential1D::cosine();
        let gle = GleIntegrator::new(v, 0.0, 1.0, 1.0, 0.01).unwrap();
        let mut rng = replica_rng(2, 0);
        let mut s = gle.init_state(0.3, 1.2, 0.0);
        let h0 = v.eval(s.q) + 0.5 * s.p * s.p;
        let mut worst: f64 = 0.0;
        for _ in 0..10_000 {
            gle.step(&mut s, &mut rng);
            worst = worst.max((v.eval(s.q) + 0.5 * s.p * s.p - h0).abs());
        }
        assert!(worst < 1e-4, "energy drift {worst}");
    }

    #[test]
    fn rejects_bad_parameters() {
        assert!(GleIntegrator::new(Potential1D::Zero, -1.0, 1.0, 1.0, 0.01).is_err());
        assert!(GleIntegrator::new(Potential1D::Zero, 1.0, 0.0, 1.0, 0.01).is_err());
    }
}
