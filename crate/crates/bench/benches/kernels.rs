use std::hint::black_box;

use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};

use fracflow_bench::{regression_fixture, synth_table, uniform_matrix};
use fracflow_core::impute::{nnmf_impute, tsvd_impute, NnmfParams};
use fracflow_core::ingest::levenshtein;
use fracflow_core::regress::{fit_gbdt, GbdtParams};
use fracflow_core::structure::{dbscan, default_eps, DEFAULT_MIN_PTS};
use fracflow_core::Matrix;

fn gbdt(c: &mut Criterion) {
    let mut g = c.benchmark_group("gbdt_fit");
    g.sample_size(10);
    for n in [1000, 4000] {
        let (x, y) = regression_fixture(n, 20, 1);
        let p = GbdtParams { n_rounds: 100, depth: 6, learning_rate: 0.1, od_wait: 0, max_bins: 63, ..GbdtParams::default() };
        g.bench_with_input(BenchmarkId::from_parameter(n), &n, |b, _| {
            b.iter(|| fit_gbdt(black_box(&x), &y, &Matrix::zeros(0, 20), &[], p).unwrap())
        });
    }
    g.finish();
}

fn clustering(c: &mut Criterion) {
    let mut g = c.benchmark_group("dbscan");
    for n in [500, 2000] {
        let x = uniform_matrix(n, 10, 2);
        let eps = default_eps(&x, DEFAULT_MIN_PTS).unwrap();
        g.bench_with_input(BenchmarkId::from_parameter(n), &n, |b, _| {
            b.iter(|| dbscan(black_box(&x), eps, DEFAULT_MIN_PTS).unwrap())
        });
    }
    g.finish();
}

fn imputation(c: &mut Criterion) {
    let t = synth_table(1000);
    let mut g = c.benchmark_group("impute");
    g.sample_size(10);
    g.bench_function("tsvd_rank5", |b| b.iter(|| tsvd_impute(black_box(&t), 5, 50, 1e-6).unwrap()));
    let signed = fracflow_core::impute::split_signed_column(&t, "skin").unwrap();
    g.bench_function("nnmf_rank5", |b| {
        b.iter(|| nnmf_impute(black_box(&signed), NnmfParams { rank: 5, max_iters: 100, tol: 1e-6, seed: 3 }).unwrap())
    });
    g.finish();
}

fn edit_distance(c: &mut Criterion) {
    let pairs = [("borovichi 16/30", "borovichl 16/3"), ("santrol 20/40", "hexion 12/18"), ("carbo", "carbo 12/18")];
    c.bench_function("levenshtein", |b| {
        b.iter(|| pairs.iter().map(|(a, z)| levenshtein(black_box(a), black_box(z))).sum::<usize>())
    });
}

criterion_group!(benches, gbdt, clustering, imputation, edit_distance);
criterion_main!(benches);
