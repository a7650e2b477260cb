use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};
use std::hint::black_box;

use gafzeros_bench::{gaussian_coeffs, gaussian_matrix};
use gafzeros_core::gaf::{aberth_roots, find_zeros, TruncatedGaf};
use gafzeros_core::intensity::permanent;
use gafzeros_core::spectral::hurwitz_zeta;
use gafzeros_core::toeplitz::{build_finite, invert_dense, invert_trench};
use gafzeros_core::ModelSpec;

fn toeplitz_inverse(c: &mut Criterion) {
    let mut g = c.benchmark_group("toeplitz_inverse");
    for n in [64usize, 256] {
        let t = build_finite(&ModelSpec::Fgn { h: 0.75 }, n).unwrap();
        g.bench_with_input(BenchmarkId::new("trench", n), &t, |b, t| b.iter(|| invert_trench(black_box(t)).unwrap()));
        g.bench_with_input(BenchmarkId::new("dense", n), &t, |b, t| b.iter(|| invert_dense(black_box(t)).unwrap()));
    }
    g.finish();
}

fn roots(c: &mut Criterion) {
    let mut g = c.benchmark_group("roots");
    for n in [30usize, 100] {
        let a = gaussian_coeffs(n, 7);
        g.bench_with_input(BenchmarkId::new("aberth", n), &a, |b, a| b.iter(|| aberth_roots(black_box(a)).unwrap()));
        let f = TruncatedGaf::new(a.clone()).unwrap();
        g.bench_with_input(BenchmarkId::new("find_zeros", n), &f, |b, f| b.iter(|| find_zeros(black_box(f), 0.6).unwrap()));
    }
    g.finish();
}

fn permanents(c: &mut Criterion) {
    let mut g = c.benchmark_group("permanent");
    for n in [3usize, 6, 10] {
        let m = gaussian_matrix(n, 11);
        g.bench_with_input(BenchmarkId::from_parameter(n), &m, |b, m| b.iter(|| permanent(black_box(m)).unwrap()));
    }
    g.finish();
}

fn zeta(c: &mut Criterion) {
    c.bench_function("hurwitz_zeta", |b| b.iter(|| hurwitz_zeta(black_box(2.5), black_box(0.013)).unwrap()));
}

criterion_group!(benches, toeplitz_inverse, roots, permanents, zeta);
criterion_main!(benches);
