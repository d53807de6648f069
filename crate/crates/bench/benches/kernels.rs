//! Benchmarks for the hot paths: counting kernels, class samplers, spanning
//! trees and exact class moments.
//!
//! Run with: cargo bench -p vincular-bench

use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};
use std::hint::black_box;

use vincular::cumulants::ClassCumulants;
use vincular::pattern::{count_fast, count_oracle};
use vincular::perm::IntegerPartition;
use vincular::sampler::{sample_class, sample_class_rec2, sample_sn, RandomStream};
use vincular::wdg::{mwst, r_value, t_ell_value, EdgeMultiset, TellMode, WeightedGraph};
use vincular::VincularPattern;

fn bench_counting(c: &mut Criterion) {
    let mut group = c.benchmark_group("count");
    let descents: VincularPattern = "21|1".parse().unwrap();
    let inversions: VincularPattern = "21|".parse().unwrap();
    let vincular3: VincularPattern = "132|1".parse().unwrap();
    for n in [200usize, 1000] {
        let mut rng = RandomStream::new(1, n as u64).rng();
        let sigma = sample_sn(n, &mut rng);
        group.bench_with_input(BenchmarkId::new("descents", n), &sigma, |b, s| {
            b.iter(|| count_fast(black_box(s), &descents))
        });
        group.bench_with_input(BenchmarkId::new("inversions", n), &sigma, |b, s| {
            b.iter(|| count_fast(black_box(s), &inversions))
        });
    }
    let mut rng = RandomStream::new(2, 0).rng();
    let sigma = sample_sn(120, &mut rng);
    group.bench_function("block_scan_132|1_n120", |b| {
        b.iter(|| count_fast(black_box(&sigma), &vincular3))
    });
    let small = sample_sn(12, &mut rng);
    group.bench_function("oracle_132|1_n12", |b| {
        b.iter(|| count_oracle(black_box(&small), &vincular3))
    });
    group.finish();
}

fn bench_sampling(c: &mut Criterion) {
    let mut group = c.benchmark_group("sample");
    for n in [100usize, 1000] {
        let lambda = IntegerPartition::new(vec![2; n / 2]).unwrap();
        group.bench_with_input(BenchmarkId::new("class_uniform", n), &lambda, |b, lam| {
            let mut rng = RandomStream::new(3, n as u64).rng();
            b.iter(|| sample_class(black_box(lam), &mut rng))
        });
        group.bench_with_input(BenchmarkId::new("class_rec2", n), &lambda, |b, lam| {
            let mut rng = RandomStream::new(4, n as u64).rng();
            b.iter(|| sample_class_rec2(black_box(lam), &mut rng).unwrap())
        });
    }
    group.finish();
}

fn bench_wdg(c: &mut Criterion) {
    let mut group = c.benchmark_group("wdg");
    use rand::Rng;
    let mut rng = RandomStream::new(5, 0).rng();
    let mut g = WeightedGraph::new(12);
    for u in 0..12 {
        for v in (u + 1)..12 {
            g.set_weight(u, v, rng.gen::<f64>());
        }
    }
    group.bench_function("mwst_12_vertices", |b| b.iter(|| mwst(black_box(&g))));

    let descents: VincularPattern = "21|1".parse().unwrap();
    group.bench_function("r_value_descents_n20", |b| {
        b.iter(|| r_value(black_box(&descents), 20).unwrap())
    });
    group.bench_function("t1_exact_descents_n8", |b| {
        b.iter(|| t_ell_value(black_box(&descents), 8, 1, TellMode::Exact).unwrap())
    });
    group.finish();
}

fn bench_cumulants(c: &mut Criterion) {
    let mut group = c.benchmark_group("cumulants");
    group.sample_size(20);
    let lambda = IntegerPartition::new(vec![2, 2, 2, 2]).unwrap();
    let engine = ClassCumulants::new(&lambda).unwrap();
    let alpha = EdgeMultiset::new(8, vec![(0, 1), (2, 3), (4, 5)]).unwrap();
    group.bench_function("mixed_cumulant_r3_n8", |b| {
        b.iter(|| engine.mixed_cumulant_b(black_box(&alpha)).unwrap())
    });
    group.bench_function("class_enumeration_2^4", |b| {
        b.iter(|| ClassCumulants::new(black_box(&lambda)).unwrap())
    });
    group.finish();
}

criterion_group!(
    benches,
    bench_counting,
    bench_sampling,
    bench_wdg,
    bench_cumulants
);
criterion_main!(benches);
