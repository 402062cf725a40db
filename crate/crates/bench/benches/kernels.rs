use std::hint::black_box;

use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};
use num_complex::Complex64;
use qpoisson_bench::{context, random_class, random_series};
use qpoisson_core::bracket::bracket_matrix;
use qpoisson_core::leaf::{LeafScanner, SearchConfig};
use qpoisson_core::theta::{theta_basis, LineBundle};

fn series_mul(c: &mut Criterion) {
    let mut g = c.benchmark_group("series_mul");
    for n in [16i64, 64, 256] {
        let a = random_series(1, -n, n);
        let b = random_series(2, -n, n);
        g.bench_with_input(BenchmarkId::from_parameter(2 * n + 1), &n, |bch, _| {
            bch.iter(|| black_box(&a).mul(black_box(&b)).unwrap())
        });
    }
    g.finish();
}

fn theta(c: &mut Criterion) {
    let ctx = context();
    let mut g = c.benchmark_group("theta_basis");
    for k in [1i64, 4, 16] {
        let b = LineBundle::new(Complex64::new(0.8, 0.0).powi(k as i32), k, &ctx).unwrap();
        g.bench_with_input(BenchmarkId::from_parameter(k), &k, |bch, _| {
            bch.iter(|| theta_basis(black_box(&b), 0, &ctx).unwrap())
        });
    }
    g.finish();
}

fn bracket(c: &mut Criterion) {
    let ctx = context();
    let mut g = c.benchmark_group("bracket_matrix");
    for k in [1usize, 2, 3, 4] {
        let x = random_class(3, k);
        g.bench_with_input(BenchmarkId::from_parameter(k), &k, |bch, _| {
            bch.iter(|| bracket_matrix(black_box(&x), &ctx).unwrap())
        });
    }
    g.finish();
}

fn instability(c: &mut Criterion) {
    let ctx = context();
    let mut g = c.benchmark_group("instability_index");
    g.sample_size(10);
    let x = random_class(4, 2);
    let scanner = LeafScanner::new(2, x.eta, &ctx, SearchConfig::default()).unwrap();
    g.bench_function("scan_k2", |bch| {
        bch.iter(|| scanner.instability_index(black_box(&x)).unwrap())
    });
    g.bench_function("grid_build_k2", |bch| {
        bch.iter(|| LeafScanner::new(2, x.eta, &ctx, SearchConfig::default()).unwrap())
    });
    g.finish();
}

criterion_group!(benches, series_mul, theta, bracket, instability);
criterion_main!(benches);
