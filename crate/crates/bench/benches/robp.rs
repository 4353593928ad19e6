use std::hint::black_box;

use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};

use robp::constructions::{exact_counter, rounded_counter, tribes, tribes_delta};
use robp::exact::int;
use robp::labeling::{verify, Problem};
use robp::oracle::{frontier, random_robp};
use robp::potential::counter_potentials;
use robp::streaming::MgSummary;
use robp::{Alphabet, Budgets};

fn constructions(c: &mut Criterion) {
    let mut g = c.benchmark_group("build");
    g.sample_size(10);
    for n in [50, 100] {
        g.bench_with_input(BenchmarkId::new("exact_counter_k3", n), &n, |b, &n| {
            b.iter(|| exact_counter(n, 3).unwrap())
        });
    }
    g.bench_function("tribes_1000_w100", |b| b.iter(|| tribes(1000, 100).unwrap()));
    g.bench_function("rounded_100_k3_d10", |b| b.iter(|| rounded_counter(100, 3, &int(10)).unwrap()));
    g.finish();
}

fn verification(c: &mut Criterion) {
    let mut g = c.benchmark_group("verify");
    g.sample_size(10);
    let p = exact_counter(100, 3).unwrap();
    g.bench_function("exact_counter_100_k3", |b| b.iter(|| verify(&p, Problem::Counter(3), 0).unwrap()));
    let t = tribes(1000, 100).unwrap();
    let delta = tribes_delta(1000, 100);
    g.bench_function("tribes_1000_w100", |b| {
        b.iter(|| verify(&t, Problem::Binary, delta.clone()).unwrap())
    });
    g.finish();
}

fn potentials(c: &mut Criterion) {
    let mut g = c.benchmark_group("potential");
    g.sample_size(10);
    let max_grid = Budgets::default().max_grid;
    let p = rounded_counter(100, 3, &int(10)).unwrap();
    g.bench_function("rounded_100_k3_d10", |b| b.iter(|| counter_potentials(&p, max_grid).unwrap()));
    let r = random_robp(200, Alphabet::counter(3).unwrap(), 64, 1);
    g.bench_function("random_200_k3_w64", |b| b.iter(|| counter_potentials(&r, max_grid).unwrap()));
    g.finish();
}

fn frontier_search(c: &mut Criterion) {
    let mut g = c.benchmark_group("frontier");
    g.sample_size(10);
    let budgets = Budgets::default();
    for (n, w) in [(8, 2), (10, 3)] {
        g.bench_with_input(BenchmarkId::new("interval_systems", format!("{n}x{w}")), &(n, w), |b, &(n, w)| {
            b.iter(|| frontier(n, w, &budgets).unwrap())
        });
    }
    g.finish();
}

fn streaming(c: &mut Criterion) {
    let stream: Vec<usize> = (0..100_000u64).map(|i| ((i * 2654435761) % 1000) as usize).collect();
    c.bench_function("misra_gries_100k_k10", |b| {
        b.iter(|| {
            let mut mg = MgSummary::new(10, 1000).unwrap();
            mg.extend(black_box(&stream).iter().copied()).unwrap();
            mg.finalize().unwrap()
        })
    });
}

criterion_group!(benches, constructions, verification, potentials, frontier_search, streaming);
criterion_main!(benches);
