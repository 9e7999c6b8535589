//! Binary node-classification harness: stratified splits, a linear
//! max-margin classifier, confusion-based metrics and the end-to-end
//! strategy comparison / alpha sweep.

mod dataset;
mod metrics;
mod pipeline;
mod svm;

pub use dataset::{split, LabeledDataset, SplitSpec};
pub use metrics::{accuracy, confusion, f1_score, macro_f1, metrics, micro_f1, precision_recall_f1, ConfusionCounts, MetricsReport};
pub use pipeline::{alpha_sweep, evaluate_embeddings, evaluate_pipeline, EvalPlan, ResultRow, ResultTable, SummaryRow};
pub use svm::{LinearSvm, SvmConfig};
