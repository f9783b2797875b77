use asymval_bench::{context, desk_plan};
use asymval_core::sectors::cantor_intervals;
use asymval_core::targets::{beta, index_of, select_target};
use asymval_core::GaussianRational;
use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};
use std::hint::black_box;

fn enumeration(c: &mut Criterion) {
    let mut g = c.benchmark_group("enumeration");
    for n in [10u64, 10_000, 10_000_000] {
        let b_n = beta(n).unwrap();
        g.bench_with_input(BenchmarkId::new("beta", n), &n, |b, &n| b.iter(|| beta(black_box(n)).unwrap()));
        g.bench_with_input(BenchmarkId::new("index_of", n), &b_n, |b, x| b.iter(|| index_of(black_box(x)).unwrap()));
    }
    g.finish();
}

fn selection(c: &mut Criterion) {
    let mut g = c.benchmark_group("select_target");
    for w in ["1/2", "7/3-5/11i", "-9+9i"] {
        let omega = GaussianRational::parse(w).unwrap();
        g.bench_with_input(BenchmarkId::from_parameter(w), &omega, |b, o| b.iter(|| select_target(black_box(o)).unwrap()));
    }
    g.finish();
}

fn cantor(c: &mut Criterion) {
    let ctx = context(128);
    let plan = desk_plan(&ctx);
    c.bench_function("cantor_depth_4", |b| b.iter(|| cantor_intervals(black_box(&plan), 4).unwrap()));
}

criterion_group!(benches, enumeration, selection, cantor);
criterion_main!(benches);
