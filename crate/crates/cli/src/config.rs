//! Pipeline configuration. Values come from built-in defaults, then an
//! optional TOML file, then command-line flags.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use tedge_core::evalkit::{EvalPlan, SvmConfig};
use tedge_core::ingest::{FetchConfig, ParseOptions, ValueUnit};
use tedge_core::walker::DEFAULT_ALPHA;
use tedge_core::{SamplingStrategy, StrategyKind, SubgraphSpec, TrainConfig, WalkConfig};

use crate::error::CliError;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PipelineConfig {
    /// Transaction export read by `ingest`.
    pub transactions: Option<PathBuf>,
    /// Label file read by `ingest`.
    pub labels: Option<PathBuf>,
    /// Artifact directory. Not recorded in manifests.
    #[serde(skip_serializing)]
    pub workdir: PathBuf,
    /// Seed for the walk corpus, embedding initialization and classifier.
    pub seed: u64,
    /// Single-worker training with bitwise reproducible output.
    pub deterministic: bool,
    pub ingest: IngestSection,
    pub subgraph: SubgraphSection,
    pub walk: WalkSection,
    pub strategy: StrategySection,
    pub train: TrainSection,
    pub eval: EvalSection,
    pub fetch: FetchSection,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct IngestSection {
    pub value_unit: ValueUnit,
    pub drop_zero_value: bool,
    pub drop_failed: bool,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SubgraphSection {
    pub k_in: usize,
    pub k_out: usize,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct WalkSection {
    pub walk_length: usize,
    pub walks_per_node: usize,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct StrategySection {
    pub kind: StrategyKind,
    pub alpha: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct TrainSection {
    pub dimension: usize,
    pub window: usize,
    pub epochs: usize,
    pub initial_learning_rate: f64,
    pub final_learning_rate: f64,
    pub workers: usize,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct EvalSection {
    pub ratios: Vec<f64>,
    pub seeds: Vec<u64>,
    pub stratified: bool,
    /// Strategies compared by `compare`.
    pub strategies: Vec<StrategyKind>,
    /// Grid used by `sweep`.
    pub alphas: Vec<f64>,
    pub lambdas: Vec<f64>,
    pub folds: usize,
    pub svm_iterations: usize,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct FetchSection {
    pub endpoint: String,
    pub max_requests_per_second: f64,
    pub page_size: usize,
    pub max_retries: u32,
    /// Extra query parameters, e.g. `[["chainid", "1"]]`.
    pub extra_params: Vec<(String, String)>,
}

impl Default for PipelineConfig {
    fn default() -> Self {
        Self {
            transactions: None,
            labels: None,
            workdir: PathBuf::from("tedge-work"),
            seed: 0,
            deterministic: true,
            ingest: IngestSection::default(),
            subgraph: SubgraphSection::default(),
            walk: WalkSection::default(),
            strategy: StrategySection::default(),
            train: TrainSection::default(),
            eval: EvalSection::default(),
            fetch: FetchSection::default(),
        }
    }
}

impl Default for IngestSection {
    fn default() -> Self {
        let p = ParseOptions::default();
        Self {
            value_unit: p.unit,
            drop_zero_value: p.drop_zero_value,
            drop_failed: p.drop_failed,
        }
    }
}

impl Default for SubgraphSection {
    fn default() -> Self {
        Self { k_in: 1, k_out: 3 }
    }
}

impl Default for WalkSection {
    fn default() -> Self {
        let w = WalkConfig::default();
        Self {
            walk_length: w.walk_length,
            walks_per_node: w.walks_per_node,
        }
    }
}

impl Default for StrategySection {
    fn default() -> Self {
        Self {
            kind: StrategyKind::TbsWbs,
            alpha: DEFAULT_ALPHA,
        }
    }
}

impl Default for TrainSection {
    fn default() -> Self {
        let t = TrainConfig::default();
        Self {
            dimension: t.dimension,
            window: t.window,
            epochs: t.epochs,
            initial_learning_rate: t.initial_learning_rate,
            final_learning_rate: t.final_learning_rate,
            workers: t.workers,
        }
    }
}

impl Default for EvalSection {
    fn default() -> Self {
        let svm = SvmConfig::default();
        Self {
            ratios: vec![0.5, 0.6, 0.7, 0.8],
            seeds: vec![0],
            stratified: true,
            strategies: StrategyKind::ALL.to_vec(),
            alphas: (0..=10).map(|i| i as f64 / 10.0).collect(),
            lambdas: svm.lambdas,
            folds: svm.folds,
            svm_iterations: svm.iterations,
        }
    }
}

impl Default for FetchSection {
    fn default() -> Self {
        let f = FetchConfig::default();
        Self {
            endpoint: f.endpoint,
            max_requests_per_second: f.max_requests_per_second,
            page_size: f.page_size,
            max_retries: f.max_retries,
            extra_params: Vec::new(),
        }
    }
}

impl PipelineConfig {
    pub fn from_toml_file(path: &Path) -> Result<Self, CliError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| CliError::Usage(format!("cannot read config {}: {e}", path.display())))?;
        toml::from_str(&text).map_err(|e| CliError::Usage(format!("invalid config {}: {e}", path.display())))
    }

    /// Rejects values no stage could run with, and flag combinations that
    /// contradict each other.
    pub fn validate(&self) -> Result<(), CliError> {
        let usage = |m: String| Err(CliError::Usage(m));
        if self.walk.walk_length == 0 || self.walk.walks_per_node == 0 {
            return usage("walk length and walks per node must be positive".into());
        }
        if !(0.0..=1.0).contains(&self.strategy.alpha) {
            return usage(format!("alpha must lie in [0, 1], got {}", self.strategy.alpha));
        }
        if let Some(a) = self.eval.alphas.iter().find(|a| !(0.0..=1.0).contains(*a)) {
            return usage(format!("sweep alpha {a} outside [0, 1]"));
        }
        if let Some(r) = self.eval.ratios.iter().find(|r| !(**r > 0.0 && **r < 1.0)) {
            return usage(format!("training ratio {r} outside (0, 1)"));
        }
        if self.eval.ratios.is_empty() || self.eval.seeds.is_empty() {
            return usage("at least one ratio and one seed are required".into());
        }
        if self.deterministic && self.train.workers > 1 {
            return usage(format!(
                "{} training workers requested in deterministic mode; pass --nondeterministic",
                self.train.workers
            ));
        }
        self.train_config(self.seed)
            .validate()
            .or_else(|e| usage(e.to_string()))?;
        Ok(())
    }

    pub fn subgraph_spec(&self, centers: Vec<String>) -> SubgraphSpec {
        SubgraphSpec::new(centers, self.subgraph.k_in, self.subgraph.k_out)
    }

    pub fn parse_options(&self) -> ParseOptions {
        ParseOptions {
            unit: self.ingest.value_unit,
            drop_zero_value: self.ingest.drop_zero_value,
            drop_failed: self.ingest.drop_failed,
        }
    }

    pub fn walk_config(&self) -> WalkConfig {
        WalkConfig {
            walk_length: self.walk.walk_length,
            walks_per_node: self.walk.walks_per_node,
            seed: self.seed,
        }
    }

    pub fn sampling_strategy(&self) -> SamplingStrategy {
        SamplingStrategy {
            alpha: self.strategy.alpha,
            ..SamplingStrategy::new(self.strategy.kind)
        }
    }

    pub fn train_config(&self, seed: u64) -> TrainConfig {
        TrainConfig {
            dimension: self.train.dimension,
            window: self.train.window,
            epochs: self.train.epochs,
            initial_learning_rate: self.train.initial_learning_rate,
            final_learning_rate: self.train.final_learning_rate,
            seed,
            workers: if self.deterministic { 1 } else { self.train.workers },
        }
    }

    pub fn svm_config(&self) -> SvmConfig {
        SvmConfig {
            lambdas: self.eval.lambdas.clone(),
            folds: self.eval.folds,
            iterations: self.eval.svm_iterations,
            seed: self.seed,
        }
    }

    pub fn eval_plan(&self) -> EvalPlan {
        EvalPlan {
            strategies: self
                .eval
                .strategies
                .iter()
                .map(|&k| SamplingStrategy {
                    alpha: self.strategy.alpha,
                    ..SamplingStrategy::new(k)
                })
                .collect(),
            walk: self.walk_config(),
            train: self.train_config(self.seed),
            svm: self.svm_config(),
            ratios: self.eval.ratios.clone(),
            seeds: self.eval.seeds.clone(),
            stratified: self.eval.stratified,
        }
    }

    pub fn fetch_config(&self, api_key: Option<String>, network_enabled: bool) -> FetchConfig {
        FetchConfig {
            endpoint: self.fetch.endpoint.clone(),
            api_key,
            extra_params: self.fetch.extra_params.clone(),
            page_size: self.fetch.page_size,
            max_requests_per_second: self.fetch.max_requests_per_second,
            max_retries: self.fetch.max_retries,
            cache_dir: Some(self.workdir.join("fetch-cache")),
            network_enabled,
            ..FetchConfig::default()
        }
    }
}
