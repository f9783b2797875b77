use asymval_bench::{context, desk_plan, half_ray};
use asymval_core::evaluate::{logr_grid, n_eval_for, phi_partial, ray_table, AngleArc};
use asymval_core::phi0::phi0_eval;
use asymval_core::{Ball, Radius};
use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};
use std::hint::black_box;

fn phi0(c: &mut Criterion) {
    let mut g = c.benchmark_group("phi0_eval");
    for bits in [64u32, 128, 256] {
        let ctx = context(bits);
        let z = Ball::from_f64(3.25, -1.5);
        g.bench_with_input(BenchmarkId::from_parameter(bits), &z, |b, z| b.iter(|| phi0_eval(black_box(z), &ctx).unwrap()));
    }
    g.finish();
}

fn partial_sums(c: &mut Criterion) {
    let ctx = context(128);
    let plan = desk_plan(&ctx);
    let ray = half_ray(&plan);
    let mut g = c.benchmark_group("phi_partial");
    for lr in [1.0, 5.0, 10.0] {
        let radius = Radius::log(lr).unwrap();
        let n_eval = n_eval_for(&radius, &plan).unwrap();
        let arc = AngleArc::point(ray.theta.clone());
        g.bench_with_input(BenchmarkId::from_parameter(lr), &radius, |b, r| {
            b.iter(|| phi_partial(black_box(r), &arc, &plan, n_eval, &ctx).unwrap())
        });
    }
    g.finish();
}

fn table(c: &mut Criterion) {
    let ctx = context(128);
    let plan = desk_plan(&ctx);
    let ray = half_ray(&plan);
    let grid = logr_grid(0.5, 11.0, 32).unwrap();
    c.bench_function("ray_table_32", |b| b.iter(|| ray_table(&ray, &plan, black_box(&grid), &ctx)));
}

criterion_group!(benches, phi0, partial_sums, table);
criterion_main!(benches);
