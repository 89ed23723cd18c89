use std::hint::black_box;

use criterion::{criterion_group, criterion_main, Criterion};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use mobility_core::control::ControlVariate;
use mobility_core::integrators::{GlaIntegrator, GleIntegrator, NoisePairCovariance};
use mobility_core::spectral::{solve_poisson, SolverChoice, SolverOptions};
use mobility_core::{Potential1D, SpectralBasis, UnderdampedProfile};

fn steps(c: &mut Criterion) {
    let pot = Potential1D::cosine();
    let gla = GlaIntegrator::new::<1>(pot, 0.1, 1.0, 0.01).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    let mut state = gla.init_state([0.3], [0.1]);
    c.bench_function("gla_step_1d", |b| {
        b.iter(|| black_box(gla.step(&mut state, &mut rng)))
    });

    let gle = GleIntegrator::new(pot, 0.1, 2.0, 1.0, 0.01).unwrap();
    let mut gstate = gle.init_state(0.3, 0.1, -0.2);
    c.bench_function("gle_step", |b| {
        b.iter(|| black_box(gle.step(&mut gstate, &mut rng)))
    });

    let noise = NoisePairCovariance::new(0.01, 0.01).unwrap();
    c.bench_function("noise_pair", |b| {
        b.iter(|| black_box(noise.sample(&mut rng)))
    });
}

fn grid_lookup(c: &mut Criterion) {
    let pot = Potential1D::cosine();
    let grid = UnderdampedProfile::build_default(&pot, 1.0)
        .unwrap()
        .to_grid(128, 192, 9.0, 0.01, 1.0)
        .unwrap();
    let mut k = 0u32;
    c.bench_function("grid_value_and_gradient", |b| {
        b.iter(|| {
            k = k.wrapping_add(1);
            let q = [(k % 997) as f64 * 0.0063];
            let p = [((k % 613) as f64 - 306.0) * 0.01];
            black_box(grid.value(&q, &p) + grid.grad_p(&q, &p)[0])
        })
    });
}

fn spectral(c: &mut Criterion) {
    let pot = Potential1D::cosine();
    let mut group = c.benchmark_group("spectral_solve");
    group.sample_size(10);
    for (n, choice) in [
        (20, SolverChoice::Dense),
        (40, SolverChoice::Dense),
        (40, SolverChoice::Iterative),
    ] {
        let basis = SpectralBasis::new(n, 0.5, 1.0, 1.0).unwrap();
        let opts = SolverOptions {
            choice,
            ..Default::default()
        };
        group.bench_function(format!("n{n}_{choice:?}"), |b| {
            b.iter(|| black_box(solve_poisson(&basis, &pot, &opts).unwrap().diffusion()))
        });
    }
    group.finish();
}

criterion_group!(benches, steps, grid_lookup, spectral);
criterion_main!(benches);
