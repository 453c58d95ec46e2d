//! Parallel against sequential execution of the batch stages.
//!
//! With the default `parallel` feature each stage runs on the full rayon pool
//! and on a one-thread pool. Built with `--no-default-features` the same
//! stages run through the sequential fallback.

use std::hint::black_box;

use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};
use geocell_core::clustering::OpticsParams;
use geocell_core::eval::{evaluate, EvalPair};
use geocell_core::geocell::{build_semantic_geocells, BuilderConfig, GeocellSet};
use geocell_core::labels::smooth_labels;
use geocell_core::refine::{build_cluster_index, refine_topk, ClusterIndex, RefineParams};
use geocell_core::synth::{synthetic_embeddings, synthetic_topk, three_country_world, World};

struct Setup {
    world: World,
    config: BuilderConfig,
    cells: GeocellSet,
    index: ClusterIndex,
    queries: Vec<(Vec<f32>, Vec<geocell_core::refine::CellProb>)>,
    pairs: Vec<EvalPair>,
}

fn setup() -> Setup {
    let world = three_country_world(11);
    let config = BuilderConfig {
        optics_rounds: vec![OpticsParams::new(10, 0.1).unwrap()],
        ..BuilderConfig::default()
    };
    let cells = build_semantic_geocells(&world.samples, &world.admins, &config).unwrap();
    let emb = synthetic_embeddings(&world.samples, 16, 0.05, 11);
    let index = build_cluster_index(&cells, &world.samples, &emb, &OpticsParams::new(3, 0.15).unwrap()).unwrap();
    let held = three_country_world(12).samples;
    let held: Vec<_> = held.into_iter().step_by(10).collect();
    let q_emb = synthetic_embeddings(&held, 16, 0.05, 11);
    let centroids = cells.centroids();
    let queries = held
        .iter()
        .enumerate()
        .map(|(i, s)| (q_emb.row(i).to_vec(), synthetic_topk(s.location, &centroids, 10, 150.0)))
        .collect();
    let pairs = held
        .iter()
        .zip(world.samples.iter())
        .map(|(a, b)| EvalPair::new(a.location, b.location))
        .collect();
    Setup {
        world,
        config,
        cells,
        index,
        queries,
        pairs,
    }
}

#[cfg(feature = "parallel")]
type Pool = Option<rayon::ThreadPool>;
#[cfg(not(feature = "parallel"))]
type Pool = Option<()>;

fn on<R: Send>(pool: &Pool, f: impl FnOnce() -> R + Send) -> R {
    match pool {
        #[cfg(feature = "parallel")]
        Some(p) => p.install(f),
        _ => f(),
    }
}

fn stages(c: &mut Criterion, label: &str, s: &Setup, pool: &Pool) {
    let mut g = c.benchmark_group("pipeline");
    g.sample_size(10);
    g.bench_with_input(BenchmarkId::new("semantic_build", label), s, |b, s| {
        b.iter(|| on(pool, || build_semantic_geocells(black_box(&s.world.samples), &s.world.admins, &s.config).unwrap()))
    });
    g.bench_with_input(BenchmarkId::new("smooth_labels", label), s, |b, s| {
        b.iter(|| on(pool, || smooth_labels(black_box(&s.world.samples), &s.cells, 75.0, false).unwrap()))
    });
    g.bench_with_input(BenchmarkId::new("refine_batch", label), s, |b, s| {
        let params = RefineParams::general();
        b.iter(|| {
            on(pool, || {
                geocell_core::par::map(&s.queries, |(q, topk)| refine_topk(q, topk, &s.index, &params).unwrap())
            })
        })
    });
    g.bench_with_input(BenchmarkId::new("evaluate", label), s, |b, s| {
        b.iter(|| on(pool, || evaluate(black_box(&s.pairs)).unwrap()))
    });
    g.finish();
}

#[cfg(feature = "parallel")]
fn bench(c: &mut Criterion) {
    let s = setup();
    let threads = rayon::current_num_threads();
    stages(c, &format!("parallel-{threads}"), &s, &None);
    let single = rayon::ThreadPoolBuilder::new().num_threads(1).build().unwrap();
    stages(c, "one-thread", &s, &Some(single));
}

#[cfg(not(feature = "parallel"))]
fn bench(c: &mut Criterion) {
    let s = setup();
    stages(c, "sequential", &s, &None);
}

criterion_group!(benches, bench);
criterion_main!(benches);
