use std::hint::black_box;

use criterion::{criterion_group, criterion_main, Criterion};
use sparsebound::bounds::minimax_supports_bruteforce;
use sparsebound::eigen::sym_eigen;
use sparsebound::estimators::{lasso_cd, universal_lambda};
use sparsebound::fano::pairwise_energy;
use sparsebound::packing::build_packing;
use sparsebound::svd::reduced_svd;
use sparsebound_bench::{design, observation, spd};

fn bench_eigen(c: &mut Criterion) {
    let mut group = c.benchmark_group("sym_eigen");
    for n in [16, 64] {
        let s = spd(n, 11);
        group.bench_function(format!("{n}x{n}"), |b| {
            b.iter(|| sym_eigen(black_box(&s)).unwrap())
        });
    }
    group.finish();
}

fn bench_svd(c: &mut Criterion) {
    let a = design(64, 32, 12);
    c.bench_function("reduced_svd/64x32", |b| {
        b.iter(|| reduced_svd(black_box(&a)).unwrap())
    });
}

fn bench_packing(c: &mut Criterion) {
    c.bench_function("build_packing/n64_k4_size16", |b| {
        b.iter(|| build_packing(64, 4, 16, black_box(9), None).unwrap())
    });
}

fn bench_lasso(c: &mut Criterion) {
    let a = design(64, 256, 13);
    let y = observation(&a, 4, 13);
    let lambda = universal_lambda(&a, 1.0);
    c.bench_function("lasso_cd/64x256", |b| {
        b.iter(|| lasso_cd(black_box(&a), black_box(&y), lambda, 1e-8, 10_000).unwrap())
    });
}

fn bench_pairwise(c: &mut Criterion) {
    let a = design(32, 64, 14);
    let (p, _) = build_packing(64, 4, 16, 9, None).unwrap();
    c.bench_function("pairwise_energy/32x64_p16", |b| {
        b.iter(|| pairwise_energy(black_box(&a), black_box(&p)).unwrap())
    });
}

fn bench_bruteforce(c: &mut Criterion) {
    let a = design(12, 12, 15);
    c.bench_function("bruteforce_supports/12x12_k2", |b| {
        b.iter(|| minimax_supports_bruteforce(black_box(&a), 2, 1.0, 1_000).unwrap())
    });
}

criterion_group!(
    kernels,
    bench_eigen,
    bench_svd,
    bench_packing,
    bench_lasso,
    bench_pairwise,
    bench_bruteforce
);
criterion_main!(kernels);
