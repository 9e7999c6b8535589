use std::collections::BTreeMap;
use std::io::Write;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::dataset::{split, LabeledDataset, SplitSpec};
use super::metrics::{confusion, metrics, MetricsReport};
use super::svm::{LinearSvm, SvmConfig};
use crate::error::{Error, Result};
use crate::sgns::{embed_corpus, NodeEmbeddings, TrainConfig};
use crate::tgraph::TemporalGraph;
use crate::walker::{generate_corpus, SamplingStrategy, StrategyKind, WalkConfig};

/// Everything `evaluate_pipeline` needs besides the graph and labels. The
/// `seed` fields inside `walk` and `train` are overridden per run.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EvalPlan {
    pub strategies: Vec<SamplingStrategy>,
    pub walk: WalkConfig,
    pub train: TrainConfig,
    pub svm: SvmConfig,
    pub ratios: Vec<f64>,
    pub seeds: Vec<u64>,
    pub stratified: bool,
}

impl Default for EvalPlan {
    fn default() -> Self {
        Self {
            strategies: StrategyKind::ALL.iter().map(|&k| SamplingStrategy::new(k)).collect(),
            walk: WalkConfig::default(),
            train: TrainConfig::default(),
            svm: SvmConfig::default(),
            ratios: vec![0.5, 0.6, 0.7, 0.8],
            seeds: vec![0],
            stratified: true,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ResultRow {
    pub strategy: StrategyKind,
    pub alpha: f64,
    pub ratio: f64,
    pub seed: u64,
    pub metrics: MetricsReport,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SummaryRow {
    pub strategy: StrategyKind,
    pub alpha: f64,
    pub ratio: f64,
    pub runs: usize,
    pub mean: MetricsReport,
    pub std: MetricsReport,
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct ResultTable {
    pub rows: Vec<ResultRow>,
}

const METRIC_COLUMNS: &str = "precision\trecall\tf1\tmicro_f1\tmacro_f1";

fn alpha_cell(kind: StrategyKind, alpha: f64) -> String {
    if kind == StrategyKind::TbsWbs {
        alpha.to_string()
    } else {
        "-".into()
    }
}

impl ResultTable {
    /// Rows for `strategy`, in table order.
    pub fn rows_for(&self, strategy: StrategyKind, alpha: Option<f64>) -> Vec<&ResultRow> {
        self.rows
            .iter()
            .filter(|r| r.strategy == strategy && alpha.is_none_or(|a| r.alpha == a))
            .collect()
    }

    /// Mean and sample standard deviation over seeds, grouped by
    /// `(strategy, alpha, ratio)` in first-appearance order.
    pub fn summary(&self) -> Vec<SummaryRow> {
        let mut order = Vec::new();
        let mut groups: BTreeMap<usize, Vec<&ResultRow>> = BTreeMap::new();
        for row in &self.rows {
            let key = (row.strategy, row.alpha.to_bits(), row.ratio.to_bits());
            let slot = match order.iter().position(|k| *k == key) {
                Some(i) => i,
                None => {
                    order.push(key);
                    order.len() - 1
                }
            };
            groups.entry(slot).or_default().push(row);
        }
        groups
            .into_values()
            .map(|rows| {
                let n = rows.len() as f64;
                let mut mean = [0.0; 5];
                for r in &rows {
                    for (m, v) in mean.iter_mut().zip(r.metrics.values()) {
                        *m += v / n;
                    }
                }
                let mut var = [0.0; 5];
                if rows.len() > 1 {
                    for r in &rows {
                        for ((s, v), m) in var.iter_mut().zip(r.metrics.values()).zip(mean) {
                            *s += (v - m) * (v - m) / (n - 1.0);
                        }
                    }
                }
                SummaryRow {
                    strategy: rows[0].strategy,
                    alpha: rows[0].alpha,
                    ratio: rows[0].ratio,
                    runs: rows.len(),
                    mean: MetricsReport::from_values(mean),
                    std: MetricsReport::from_values(var.map(f64::sqrt)),
                }
            })
            .collect()
    }

    /// Tab-separated, one row per run.
    pub fn write_tsv<W: Write>(&self, mut out: W) -> std::io::Result<()> {
        writeln!(out, "strategy\talpha\tratio\tseed\t{METRIC_COLUMNS}")?;
        for r in &self.rows {
            let m = &r.metrics;
            writeln!(
                out,
                "{}\t{}\t{}\t{}\t{}\t{}\t{}\t{}\t{}",
                r.strategy,
                alpha_cell(r.strategy, r.alpha),
                r.ratio,
                r.seed,
                m.precision,
                m.recall,
                m.f1,
                m.micro_f1,
                m.macro_f1
            )?;
        }
        out.flush()
    }

    pub fn write_summary_tsv<W: Write>(&self, mut out: W) -> std::io::Result<()> {
        writeln!(
            out,
            "strategy\talpha\tratio\truns\tprecision\tprecision_std\trecall\trecall_std\tf1\tf1_std\tmicro_f1\tmicro_f1_std\tmacro_f1\tmacro_f1_std"
        )?;
        for s in self.summary() {
            write!(
                out,
                "{}\t{}\t{}\t{}",
                s.strategy,
                alpha_cell(s.strategy, s.alpha),
                s.ratio,
                s.runs
            )?;
            for (m, sd) in s.mean.values().iter().zip(s.std.values()) {
                write!(out, "\t{m:.6}\t{sd:.6}")?;
            }
            writeln!(out)?;
        }
        out.flush()
    }
}

/// Splits the labeled nodes, fits the classifier and scores the test half,
/// once per `(ratio, seed)`.
pub fn evaluate_embeddings(
    embeddings: &NodeEmbeddings,
    labels: &[(String, bool)],
    ratios: &[f64],
    seeds: &[u64],
    svm: &SvmConfig,
    stratified: bool,
) -> Result<Vec<(f64, u64, MetricsReport)>> {
    let dataset = LabeledDataset::from_embeddings(embeddings, labels)?;
    let mut out = Vec::with_capacity(ratios.len() * seeds.len());
    for &ratio in ratios {
        for &seed in seeds {
            out.push((ratio, seed, score_split(&dataset, ratio, seed, svm, stratified)?));
        }
    }
    Ok(out)
}

fn score_split(dataset: &LabeledDataset, ratio: f64, seed: u64, svm: &SvmConfig, stratified: bool) -> Result<MetricsReport> {
    let (train, test) = split(
        dataset,
        &SplitSpec {
            train_ratio: ratio,
            seed,
            stratified,
        },
    )?;
    let model = LinearSvm::fit(&train, &SvmConfig { seed, ..svm.clone() })?;
    let counts = confusion(&test.labels, &model.predict_all(&test))?;
    Ok(metrics(&counts))
}

/// For every `(strategy, seed)`: walk corpus, embeddings, then one
/// classification per ratio. Runs are independent and evaluated in parallel;
/// row order is `strategy, seed, ratio` regardless of scheduling.
pub fn evaluate_pipeline(graph: &TemporalGraph, labels: &[(String, bool)], plan: &EvalPlan) -> Result<ResultTable> {
    if labels.is_empty() {
        return Err(Error::Validation("no labeled nodes to evaluate".into()));
    }
    if let Some((id, _)) = labels.iter().find(|(id, _)| graph.node(id).is_none()) {
        return Err(Error::UnknownNode(id.clone()));
    }
    for s in &plan.strategies {
        s.validate()?;
    }
    let cells: Vec<(SamplingStrategy, u64)> = plan
        .strategies
        .iter()
        .flat_map(|&s| plan.seeds.iter().map(move |&seed| (s, seed)))
        .collect();
    let per_cell = cells
        .par_iter()
        .map(|&(strategy, seed)| -> Result<Vec<ResultRow>> {
            let walk = WalkConfig { seed, ..plan.walk };
            let train = TrainConfig {
                seed,
                ..plan.train.clone()
            };
            let corpus = generate_corpus(graph, &walk, &strategy)?;
            let embeddings = embed_corpus(graph, &corpus.walks, &train)?;
            let dataset = LabeledDataset::from_embeddings(&embeddings, labels)?;
            plan.ratios
                .iter()
                .map(|&ratio| {
                    Ok(ResultRow {
                        strategy: strategy.kind,
                        alpha: strategy.alpha,
                        ratio,
                        seed,
                        metrics: score_split(&dataset, ratio, seed, &plan.svm, plan.stratified)?,
                    })
                })
                .collect()
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(ResultTable {
        rows: per_cell.into_iter().flatten().collect(),
    })
}

/// `evaluate_pipeline` with the blended strategy at each `alpha`; the plan's
/// own strategy list is ignored.
pub fn alpha_sweep(graph: &TemporalGraph, labels: &[(String, bool)], alphas: &[f64], plan: &EvalPlan) -> Result<ResultTable> {
    if let Some(a) = alphas.iter().find(|a| !(0.0..=1.0).contains(*a)) {
        return Err(Error::Validation(format!("alpha {a} outside [0, 1]")));
    }
    let plan = EvalPlan {
        strategies: alphas.iter().map(|&a| SamplingStrategy::tbs_wbs(a)).collect(),
        ..plan.clone()
    };
    evaluate_pipeline(graph, labels, &plan)
}
