use std::hint::black_box;

use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};
use pcrrr::penalty::DEFAULT_RANK_TOLERANCE;
use pcrrr::solver::{procrustes, update_d};
use pcrrr::{build_penalty_set, fit, Hyperparameters, Matrix, SolverConfig};
use pcrrr_bench::fixture;

fn bench_fit(c: &mut Criterion) {
    let mut group = c.benchmark_group("fit");
    group.sample_size(20);
    for grouped in [false, true] {
        let sim = fixture(grouped, 200, 100);
        for theta in [0.0, 0.003] {
            let hp = Hyperparameters::new(20.0, theta, 3);
            let id = format!("{}/theta={theta}", if grouped { "grouped" } else { "ungrouped" });
            group.bench_function(BenchmarkId::from_parameter(id), |b| {
                b.iter(|| fit(black_box(&sim.train), &sim.groups, &hp, &SolverConfig::default()).unwrap());
            });
        }
    }
    group.finish();
}

fn bench_d_step(c: &mut Criterion) {
    let sim = fixture(false, 200, 100);
    let truth = &sim.truth.factors.c;
    c.bench_function("update_d/p200_q5_r3", |b| {
        b.iter(|| update_d(black_box(&sim.train), black_box(truth)).unwrap());
    });
    let rank_one = Matrix::from_fn(50, 4, |i, j| (i as f64 + 1.0) * (j as f64 - 1.5));
    c.bench_function("procrustes/rank_deficient_50x4", |b| {
        b.iter(|| procrustes(black_box(&rank_one)).unwrap());
    });
}

fn bench_penalty(c: &mut Criterion) {
    let mut group = c.benchmark_group("build_penalty_set");
    for p in [200, 400] {
        let sim = fixture(true, p, 100);
        group.bench_with_input(BenchmarkId::from_parameter(p), &sim, |b, sim| {
            b.iter(|| build_penalty_set(black_box(&sim.train), &sim.groups, DEFAULT_RANK_TOLERANCE).unwrap());
        });
    }
    group.finish();
}

criterion_group!(benches, bench_fit, bench_d_step, bench_penalty);
criterion_main!(benches);
