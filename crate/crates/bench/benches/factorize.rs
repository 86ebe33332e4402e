use std::hint::black_box;

use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};
use ratex_bench::{fixture, SHAPES};
use ratex_core::identcore::IdentSystem;
use ratex_core::resolve::required_horizon;
use ratex_core::{solve, wh_factorize, ToleranceConfig};

fn label(&(n, m, l, k): &(usize, usize, usize, usize)) -> String {
    format!("n{n}m{m}l{l}k{k}")
}

fn bench_factorize(c: &mut Criterion) {
    let tol = ToleranceConfig::default();
    let mut g = c.benchmark_group("wh_factorize");
    for (i, s) in SHAPES.iter().enumerate() {
        let model = fixture(s.0, s.1, s.2, s.3, i as u64);
        g.bench_with_input(BenchmarkId::from_parameter(label(s)), &model, |b, model| {
            b.iter(|| wh_factorize(black_box(model.b()), &tol).unwrap())
        });
    }
    g.finish();
}

fn bench_solve(c: &mut Criterion) {
    let tol = ToleranceConfig::default();
    let mut g = c.benchmark_group("solve");
    for (i, s) in SHAPES.iter().enumerate() {
        let model = fixture(s.0, s.1, s.2, s.3, i as u64);
        let h = required_horizon(s.0, s.3, s.2);
        g.bench_with_input(BenchmarkId::from_parameter(label(s)), &model, |b, model| {
            b.iter(|| solve(black_box(model), h, &tol).unwrap())
        });
    }
    g.finish();
}

fn bench_ident_system(c: &mut Criterion) {
    let tol = ToleranceConfig::default();
    let mut g = c.benchmark_group("ident_system");
    for (i, s) in SHAPES.iter().enumerate() {
        let model = fixture(s.0, s.1, s.2, s.3, i as u64);
        let bundle = solve(&model, required_horizon(s.0, s.3, s.2), &tol).unwrap();
        g.bench_with_input(BenchmarkId::from_parameter(label(s)), &bundle, |b, bundle| {
            b.iter(|| IdentSystem::from_bundle(black_box(bundle), &tol).unwrap())
        });
    }
    g.finish();
}

criterion_group!(benches, bench_factorize, bench_solve, bench_ident_system);
criterion_main!(benches);
