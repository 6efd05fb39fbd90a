//! Sequential loops against the rayon-backed paths, on a one-worker pool and
//! on a pool with every core (at least two workers).

use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};
use rayon::ThreadPool;

use ofdb_core::dataset::{DatasetSpec, Renderer};
use ofdb_core::ifs::Dimension;
use ofdb_core::search::{evaluate_candidate, search, SearchConfig};
use ofdb_core::train::{materialize_batch, materialize_entry, plan_categories, PlanOptions};
use ofdb_core::SeedKey;

const CATEGORIES: usize = 16;
const POINTS: usize = 20_000;

fn pools() -> Vec<(String, ThreadPool)> {
    let cores = std::thread::available_parallelism().map_or(2, |n| n.get().max(2));
    [1, cores]
        .into_iter()
        .map(|n| {
            let pool = rayon::ThreadPoolBuilder::new()
                .num_threads(n)
                .build()
                .unwrap();
            (format!("rayon-{n}"), pool)
        })
        .collect()
}

fn spec() -> DatasetSpec {
    let mut spec = DatasetSpec::ofdb(Dimension::Two, CATEGORIES, 1);
    spec.search.points = POINTS;
    spec.search.render_probe = 128;
    spec
}

fn bench_search(c: &mut Criterion) {
    let spec = spec();
    let cfg: SearchConfig = spec.search.clone();
    let mut g = c.benchmark_group("search");
    g.sample_size(10);
    // The parallel search evaluates whole batches of candidates, so it does
    // slightly more work than this loop.
    g.bench_function("sequential", |b| {
        b.iter(|| {
            let mut accepted = 0;
            let mut i = 0u64;
            while accepted < CATEGORIES {
                if evaluate_candidate(Dimension::Two, SeedKey::new(1, i), &cfg).is_some() {
                    accepted += 1;
                }
                i += 1;
            }
            accepted
        })
    });
    for (name, pool) in pools() {
        g.bench_function(BenchmarkId::new("parallel", name), |b| {
            b.iter(|| pool.install(|| search(&cfg, Dimension::Two, 1).unwrap()))
        });
    }
    g.finish();
}

fn bench_render(c: &mut Criterion) {
    let spec = spec();
    let categories = search(&spec.search, Dimension::Two, 1).unwrap().records;
    let renderer = Renderer::new(&spec, categories);
    let ids: Vec<usize> = (0..CATEGORIES).collect();
    let plan = plan_categories(
        &ids,
        0,
        CATEGORIES,
        PlanOptions::default(),
        SeedKey::new(1, 0),
    )
    .unwrap();
    let mut g = c.benchmark_group("render");
    g.sample_size(10);
    g.bench_function("sequential", |b| {
        b.iter(|| {
            plan.entries
                .iter()
                .map(|e| materialize_entry(&renderer, &plan.options, e).unwrap())
                .collect::<Vec<_>>()
        })
    });
    for (name, pool) in pools() {
        g.bench_function(BenchmarkId::new("parallel", name), |b| {
            b.iter(|| {
                pool.install(|| materialize_batch(&renderer, &plan.options, &plan.entries).unwrap())
            })
        });
    }
    g.finish();
}

criterion_group!(benches, bench_search, bench_render);
criterion_main!(benches);
