use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion, Throughput};
use std::hint::black_box;
use tedge_core::seeding;
use tedge_core::synth::{planted_temporal_graph, random_multigraph, PlantedConfig};
use tedge_core::walker::{edge_probabilities, generate_corpus};
use tedge_core::{SamplingStrategy, StrategyKind, WalkConfig};

fn probabilities(c: &mut Criterion) {
    let mut group = c.benchmark_group("edge_probabilities");
    for n in [4usize, 32, 256] {
        let ts: Vec<i64> = (0..n as i64).map(|i| (i * 7919) % 97).collect();
        let ws: Vec<f64> = (0..n).map(|i| ((i * 31) % 13) as f64 * 0.5).collect();
        group.throughput(Throughput::Elements(n as u64));
        for kind in [StrategyKind::Uniform, StrategyKind::Tbs, StrategyKind::Wbs, StrategyKind::TbsWbs] {
            let s = SamplingStrategy::new(kind);
            group.bench_with_input(BenchmarkId::new(kind.name(), n), &n, |b, _| {
                b.iter(|| edge_probabilities(black_box(&ts), black_box(&ws), &s).unwrap())
            });
        }
    }
    group.finish();
}

fn neighborhood_lookup(c: &mut Criterion) {
    let mut rng = seeding::stream(1, &[]);
    let g = random_multigraph(50, 20_000, 10_000, 8, &mut rng);
    let nodes: Vec<_> = g.nodes().collect();
    c.bench_function("neighborhood/deg400", |b| {
        let mut t = 0i64;
        b.iter(|| {
            t = (t + 997) % 10_000;
            nodes.iter().map(|&n| g.neighborhood(n, black_box(t)).len()).sum::<usize>()
        })
    });
}

fn corpus(c: &mut Criterion) {
    let (g, _) = planted_temporal_graph(&PlantedConfig::default(), 1);
    let cfg = WalkConfig::default();
    let mut group = c.benchmark_group("generate_corpus");
    group.sample_size(20);
    group.throughput(Throughput::Elements((cfg.walks_per_node * g.node_count()) as u64));
    for kind in [StrategyKind::StaticUniform, StrategyKind::Tbs, StrategyKind::TbsWbs] {
        let s = SamplingStrategy::new(kind);
        group.bench_function(kind.name(), |b| b.iter(|| generate_corpus(&g, &cfg, &s).unwrap()));
    }
    group.finish();
}

criterion_group!(benches, probabilities, neighborhood_lookup, corpus);
criterion_main!(benches);
