use criterion::{criterion_group, criterion_main, Criterion, Throughput};
use tedge_core::evalkit::{LabeledDataset, LinearSvm, SvmConfig};
use tedge_core::sgns::{count_pairs, embed_corpus};
use tedge_core::synth::{planted_temporal_graph, PlantedConfig};
use tedge_core::walker::generate_corpus;
use tedge_core::{HuffmanTree, SamplingStrategy, StrategyKind, TrainConfig, WalkConfig};

fn skipgram(c: &mut Criterion) {
    let (g, labels) = planted_temporal_graph(&PlantedConfig::default(), 1);
    let corpus = generate_corpus(&g, &WalkConfig::default(), &SamplingStrategy::new(StrategyKind::Tbs)).unwrap();

    c.bench_function("huffman/2000", |b| b.iter(|| HuffmanTree::build(&corpus.node_frequencies).unwrap()));

    let mut group = c.benchmark_group("train_epoch");
    group.sample_size(10);
    group.throughput(Throughput::Elements(count_pairs(&corpus.walks, 4)));
    for d in [32usize, 128] {
        let cfg = TrainConfig { dimension: d, epochs: 1, ..TrainConfig::default() };
        group.bench_function(format!("d{d}"), |b| b.iter(|| embed_corpus(&g, &corpus.walks, &cfg).unwrap()));
    }
    group.finish();

    let emb = embed_corpus(&g, &corpus.walks, &TrainConfig { dimension: 128, epochs: 1, ..TrainConfig::default() }).unwrap();
    let data = LabeledDataset::from_embeddings(&emb, &labels).unwrap();
    let mut group = c.benchmark_group("svm");
    group.sample_size(10);
    group.bench_function("fit_cv_400x128", |b| b.iter(|| LinearSvm::fit(&data, &SvmConfig::default()).unwrap()));
    group.finish();
}

criterion_group!(benches, skipgram);
criterion_main!(benches);
