use std::hint::black_box;

use criterion::{criterion_group, criterion_main, Criterion};
use pcrrr::selection::{cross_validate, CvPlan, LambdaGrid};
use pcrrr::{Method, SolverConfig};
use pcrrr_bench::fixture;

fn bench_cv(c: &mut Criterion) {
    let sim = fixture(false, 200, 100);
    let plan = CvPlan {
        lambda_grid: LambdaGrid::Auto { size: 8 },
        theta_grid: vec![0.0, 0.003],
        alpha_grid: vec![0.5],
        rank_grid: vec![3],
        ..CvPlan::default()
    };
    let mut group = c.benchmark_group("cross_validate");
    group.sample_size(10);
    for method in [Method::Proposed, Method::MElastic] {
        group.bench_function(method.name(), |b| {
            b.iter(|| cross_validate(black_box(&sim.train), &sim.groups, &plan, method, &SolverConfig::default()).unwrap());
        });
    }
    group.finish();
}

criterion_group!(benches, bench_cv);
criterion_main!(benches);
