use criterion::{black_box, criterion_group, criterion_main, Criterion};

use secanta_bench::{fermion_phi, w_state};
use secanta_core::rank::{best_rank_r, estimate_rank, secant_dim, FitOptions, RankOptions};
use secanta_core::{parse_ket, SystemSpec};

fn secant(c: &mut Criterion) {
    let q4 = SystemSpec::qubits(4);
    c.bench_function("secant_dim 4 qubits r=3", |b| b.iter(|| secant_dim(black_box(&q4), 3, 0)));
    let v = SystemSpec::bosonic(3, 4).unwrap();
    c.bench_function("secant_dim bosonic n=3 L=4 r=5", |b| b.iter(|| secant_dim(black_box(&v), 5, 0)));
}

fn fits(c: &mut Criterion) {
    let w = w_state(3);
    let ghz = parse_ket("|000>+|111>", &SystemSpec::qubits(3)).unwrap();
    let opts = FitOptions { restarts: 8, ..FitOptions::default() };
    c.bench_function("bounded fit GHZ r=2", |b| b.iter(|| best_rank_r(black_box(&ghz), 2, &opts)));
    c.bench_function("bounded fit W r=2", |b| b.iter(|| best_rank_r(black_box(&w), 2, &opts)));
}

fn rank_reports(c: &mut Criterion) {
    let mut g = c.benchmark_group("estimate_rank");
    g.sample_size(10);
    let w3 = w_state(3);
    g.bench_function("W3", |b| b.iter(|| estimate_rank(black_box(&w3), &RankOptions::default())));
    let phi = fermion_phi();
    g.bench_function("fermionic phi", |b| b.iter(|| estimate_rank(black_box(&phi), &RankOptions::default())));
    g.finish();
}

criterion_group!(benches, secant, fits, rank_reports);
criterion_main!(benches);
