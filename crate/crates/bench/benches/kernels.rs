use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};
use msfuzzy::estimate::{fit_ms, EstimationConfig};
use msfuzzy::{filter_and_smooth, fuzzy_kmeans, rand_index, select_k, FuzzyConfig, SelectConfig};
use msfuzzy_bench::fixture;

fn filter(c: &mut Criterion) {
    let mut g = c.benchmark_group("filter_and_smooth");
    for label in ["MS2--1", "MS3--1", "MS3AR--1"] {
        let (spec, y, _) = fixture(label, 100, 1);
        g.bench_with_input(BenchmarkId::from_parameter(label), &y, |b, y| {
            b.iter(|| filter_and_smooth(y, &spec).unwrap())
        });
    }
    g.finish();
}

fn clustering(c: &mut Criterion) {
    let (_, y, _) = fixture("MS3--2", 100, 2);
    c.bench_function("fuzzy_kmeans_k3", |b| {
        b.iter(|| fuzzy_kmeans(y.values(), 3, 2.0, &FuzzyConfig::default()).unwrap())
    });
    c.bench_function("select_k_kmax6", |b| {
        b.iter(|| select_k(y.values(), &SelectConfig::default()).unwrap())
    });
}

fn estimation(c: &mut Criterion) {
    let (_, y, _) = fixture("MS2--1", 100, 3);
    let cfg = EstimationConfig {
        n_restarts: 1,
        ..Default::default()
    };
    c.bench_function("fit_ms_k2_single_start", |b| b.iter(|| fit_ms(&y, 2, 0, &cfg).unwrap()));
}

fn agreement(c: &mut Criterion) {
    let (spec, y, truth) = fixture("MS3--1", 1000, 4);
    let inferred = msfuzzy::infer_states(&y, &spec).unwrap();
    c.bench_function("rand_index_T1000", |b| b.iter(|| rand_index(&truth, &inferred).unwrap()));
}

criterion_group!(benches, filter, clustering, estimation, agreement);
criterion_main!(benches);
