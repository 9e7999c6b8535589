//! Temporal weighted multidigraph embedding.
//!
//! Transaction records become a [`TemporalGraph`] (a directed multigraph whose
//! edges carry an amount and a timestamp). Time-respecting biased random walks
//! ([`walker`]) feed a skip-gram model trained with hierarchical softmax
//! ([`sgns`]), and the resulting node vectors are scored by a binary
//! node-classification harness ([`evalkit`]). [`ingest`] handles parsing,
//! explorer fetches and on-disk formats.

pub mod error;
pub mod evalkit;
pub mod ingest;
pub mod seeding;
pub mod sgns;
pub mod synth;
pub mod tgraph;
pub mod walker;

pub use error::{Error, Result};
pub use evalkit::{
    ConfusionCounts, LabeledDataset, LinearSvm, MetricsReport, ResultRow, ResultTable, SplitSpec,
};
pub use sgns::{EmbeddingModel, HuffmanTree, TrainConfig};
pub use tgraph::{EdgeId, NodeId, SubgraphSpec, TemporalEdge, TemporalGraph, Timestamp};
pub use walker::{SamplingStrategy, StrategyKind, Walk, WalkConfig, WalkCorpus};
