//! Parallel against sequential execution of the batch kernels, plus the cost
//! of the two eigenvalue precisions.
//!
//! `cargo bench` measures the rayon pool against a one-thread pool; building
//! with `--no-default-features` turns every kernel sequential outright.

use std::hint::black_box;

use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};
use gbzlab::gbz::gbz_curve;
use gbzlab::linalg::Dd;
use gbzlab::model::{hamiltonian_in, ModelParams};
use gbzlab::spectral::eigenvalues_in;
use gbzlab::sweep::{run_sweep, Axis, AxisName, SweepSpec};
use gbzlab::tearing::{critical_epsilon, epsilon_grid};

fn pools() -> Vec<(String, rayon::ThreadPool)> {
    let mut out = vec![("sequential".to_string(), rayon::ThreadPoolBuilder::new().num_threads(1).build().unwrap())];
    let n = std::thread::available_parallelism().map_or(1, |n| n.get());
    if gbzlab::par::PARALLEL && n > 1 {
        out.push((format!("parallel-{n}"), rayon::ThreadPoolBuilder::new().num_threads(n).build().unwrap()));
    }
    out
}

fn sweep(c: &mut Criterion) {
    let mut spec = SweepSpec::new(
        Axis::new(AxisName::T1, 0.1, 2.5, 8),
        Axis::new(AxisName::Epsilon, 0.0, 2.5, 8),
        ModelParams::ring(1.0, 1.0, 0.9, 0.0, 10),
    );
    spec.classifier_config.special.theta_steps = 128;
    let mut g = c.benchmark_group("sweep_8x8");
    g.sample_size(10);
    for (name, pool) in pools() {
        g.bench_function(BenchmarkId::from_parameter(&name), |b| b.iter(|| pool.install(|| run_sweep(black_box(&spec)).unwrap())));
    }
    g.finish();
}

fn curve(c: &mut Criterion) {
    let p = ModelParams::ring(0.7, 1.0, 2.0 / 3.0, 0.8, 30);
    let mut g = c.benchmark_group("gbz_curve_512");
    for (name, pool) in pools() {
        g.bench_function(BenchmarkId::from_parameter(&name), |b| b.iter(|| pool.install(|| gbz_curve(black_box(&p), 512).unwrap())));
    }
    g.finish();
}

fn tearing(c: &mut Criterion) {
    let base = ModelParams::ring(0.7, 1.0, 2.0 / 3.0, 0.0, 30);
    let grid = epsilon_grid(0.6, 0.8, 0.01).unwrap();
    let mut g = c.benchmark_group("tearing_scan");
    g.sample_size(10);
    for (name, pool) in pools() {
        g.bench_function(BenchmarkId::from_parameter(&name), |b| b.iter(|| pool.install(|| critical_epsilon(black_box(&base), &grid).unwrap())));
    }
    g.finish();
}

fn precision(c: &mut Criterion) {
    let p = ModelParams::ring(1.7, 1.0, 1.6, 2.5, 30);
    let h64 = hamiltonian_in::<f64>(&p).unwrap();
    let hdd = hamiltonian_in::<Dd>(&p).unwrap();
    let mut g = c.benchmark_group("eigenvalues_120");
    g.sample_size(10);
    g.bench_function("f64", |b| b.iter(|| eigenvalues_in(black_box(&h64)).unwrap()));
    g.bench_function("double-double", |b| b.iter(|| eigenvalues_in(black_box(&hdd)).unwrap()));
    g.finish();
}

criterion_group!(benches, sweep, curve, tearing, precision);
criterion_main!(benches);
