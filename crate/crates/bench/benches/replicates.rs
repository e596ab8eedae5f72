use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};
use std::hint::black_box;

use mscreen::bootstrap::{draw_multipliers, DwbKernel, PwbKernel};
use mscreen::rng;
use mscreen::{
    default_block_size, fit_marginal, generate, make_blocks, run_test, standardize, BootstrapConfig, CovariateLaw,
    DgpSpec, ErrorLaw, Method, Model, StatKind,
};

fn sample(n: usize, p: usize) -> mscreen::Sample {
    let spec = DgpSpec::new(n, p, Model::I, ErrorLaw::E1, CovariateLaw::C1 { gamma: 0.0 }, 7);
    standardize(&generate(&spec).unwrap()).unwrap()
}

fn bench_fit(c: &mut Criterion) {
    let mut group = c.benchmark_group("fit_marginal");
    for (n, p) in [(200, 50), (400, 714)] {
        let s = sample(n, p);
        group.bench_with_input(BenchmarkId::from_parameter(format!("{n}x{}", p + 1)), &s, |b, s| {
            b.iter(|| fit_marginal(black_box(s)).unwrap())
        });
    }
    group.finish();
}

fn bench_replicate(c: &mut Criterion) {
    let mut group = c.benchmark_group("replicate");
    for (n, p) in [(200, 50), (400, 714)] {
        let s = sample(n, p);
        let w = vec![1.0; s.p()];
        let part = make_blocks(n, default_block_size(n).unwrap()).unwrap();
        let eta = draw_multipliers(&part, &mut rng::stream(1, &[0]));
        let dwb = DwbKernel::new(&s, &w, StatKind::Max).unwrap();
        let pwb = PwbKernel::new(&s, &w, StatKind::Max).unwrap();
        let label = format!("{n}x{}", p + 1);
        group.bench_function(BenchmarkId::new("dwb", &label), |b| {
            b.iter(|| dwb.replicate(black_box(&eta)))
        });
        group.bench_function(BenchmarkId::new("pwb", &label), |b| {
            b.iter(|| pwb.replicate(black_box(&eta)))
        });
    }
    group.finish();
}

fn bench_full_test(c: &mut Criterion) {
    let s = sample(400, 714);
    let mut group = c.benchmark_group("run_test");
    group.sample_size(10);
    for method in [Method::Dwb, Method::Pwb] {
        let cfg = BootstrapConfig {
            method,
            replicates: 500,
            block_size: 15,
            ..Default::default()
        };
        group.bench_function(format!("{method:?}_400x715_M500"), |b| {
            b.iter(|| run_test(&s, &cfg).unwrap())
        });
    }
    group.finish();
}

criterion_group!(benches, bench_fit, bench_replicate, bench_full_test);
criterion_main!(benches);
