//! Command-line surface.

use std::path::PathBuf;

use clap::{Args, Parser, Subcommand};
use tedge_core::ingest::ValueUnit;
use tedge_core::StrategyKind;

use crate::commands;
use crate::config::PipelineConfig;
use crate::error::CliError;

#[derive(Debug, Parser)]
#[command(name = "tedge", version, about = "Temporal transaction-graph embedding and phishing-node classification")]
pub struct Cli {
    #[command(flatten)]
    pub overrides: Overrides,

    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Parse transactions and labels into graph/ and labels.csv.
    Ingest,
    /// Download account transaction lists from an Etherscan-compatible API.
    Fetch(FetchArgs),
    /// Extract and splice K-order subgraphs around labeled nodes.
    Subgraph,
    /// Generate the walk corpus.
    Walk,
    /// Train embeddings on the walk corpus.
    Embed,
    /// Classify labeled nodes from the embeddings.
    Classify,
    /// Evaluate the blended strategy over a grid of alpha values.
    Sweep,
    /// Evaluate several strategies end to end.
    Compare,
    /// Run ingest, subgraph, walk, embed and classify in sequence.
    Pipeline,
}

#[derive(Debug, Args)]
pub struct FetchArgs {
    /// Address to fetch; repeatable.
    #[arg(long = "address")]
    pub addresses: Vec<String>,
    /// Also fetch every address listed in the label file.
    #[arg(long)]
    pub from_labels: bool,
    /// Allow network access. Without it only cached addresses are served.
    #[arg(long)]
    pub network: bool,
    #[arg(long, env = "ETHERSCAN_API_KEY", hide_env_values = true)]
    pub api_key: Option<String>,
}

fn parse_unit(s: &str) -> Result<ValueUnit, String> {
    match s.to_ascii_lowercase().as_str() {
        "auto" => Ok(ValueUnit::Auto),
        "wei" => Ok(ValueUnit::Wei),
        "ether" | "eth" => Ok(ValueUnit::Ether),
        _ => Err(format!("expected auto, wei or ether, got `{s}`")),
    }
}

/// Flags that override the configuration file. Accepted before or after the
/// subcommand.
#[derive(Debug, Default, Args)]
pub struct Overrides {
    /// TOML configuration file.
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
    #[arg(long, global = true)]
    pub workdir: Option<PathBuf>,
    #[arg(long, global = true)]
    pub seed: Option<u64>,
    #[arg(long, global = true)]
    pub transactions: Option<PathBuf>,
    #[arg(long, global = true)]
    pub labels: Option<PathBuf>,
    /// auto, wei or ether.
    #[arg(long, global = true, value_parser = parse_unit)]
    pub value_unit: Option<ValueUnit>,
    #[arg(long, global = true)]
    pub drop_zero_value: bool,
    #[arg(long, global = true)]
    pub drop_failed: bool,
    #[arg(long, global = true)]
    pub k_in: Option<usize>,
    #[arg(long, global = true)]
    pub k_out: Option<usize>,
    #[arg(long, global = true)]
    pub walk_length: Option<usize>,
    #[arg(long, global = true)]
    pub walks_per_node: Option<usize>,
    /// uniform, tbs, wbs, tbs_wbs or static_uniform.
    #[arg(long, global = true)]
    pub strategy: Option<StrategyKind>,
    #[arg(long, global = true)]
    pub alpha: Option<f64>,
    #[arg(long, global = true)]
    pub dimension: Option<usize>,
    #[arg(long, global = true)]
    pub window: Option<usize>,
    #[arg(long, global = true)]
    pub epochs: Option<usize>,
    /// Training threads; more than one requires --nondeterministic.
    #[arg(long, global = true)]
    pub workers: Option<usize>,
    #[arg(long, global = true)]
    pub nondeterministic: bool,
    #[arg(long, global = true, value_delimiter = ',')]
    pub ratios: Vec<f64>,
    #[arg(long = "eval-seeds", global = true, value_delimiter = ',')]
    pub eval_seeds: Vec<u64>,
    #[arg(long, global = true, value_delimiter = ',')]
    pub alphas: Vec<f64>,
    #[arg(long, global = true, value_delimiter = ',')]
    pub strategies: Vec<StrategyKind>,
}

impl Overrides {
    /// Defaults, then the config file, then these flags.
    pub fn resolve(&self) -> Result<PipelineConfig, CliError> {
        let mut c = match &self.config {
            Some(path) => PipelineConfig::from_toml_file(path)?,
            None => PipelineConfig::default(),
        };
        macro_rules! set {
            ($field:expr, $value:expr) => {
                if let Some(v) = $value.clone() {
                    $field = v;
                }
            };
        }
        set!(c.workdir, self.workdir);
        set!(c.seed, self.seed);
        if self.transactions.is_some() {
            c.transactions = self.transactions.clone();
        }
        if self.labels.is_some() {
            c.labels = self.labels.clone();
        }
        set!(c.ingest.value_unit, self.value_unit);
        c.ingest.drop_zero_value |= self.drop_zero_value;
        c.ingest.drop_failed |= self.drop_failed;
        set!(c.subgraph.k_in, self.k_in);
        set!(c.subgraph.k_out, self.k_out);
        set!(c.walk.walk_length, self.walk_length);
        set!(c.walk.walks_per_node, self.walks_per_node);
        set!(c.strategy.kind, self.strategy);
        set!(c.strategy.alpha, self.alpha);
        set!(c.train.dimension, self.dimension);
        set!(c.train.window, self.window);
        set!(c.train.epochs, self.epochs);
        set!(c.train.workers, self.workers);
        if self.nondeterministic {
            c.deterministic = false;
        }
        if !self.ratios.is_empty() {
            c.eval.ratios = self.ratios.clone();
        }
        if !self.eval_seeds.is_empty() {
            c.eval.seeds = self.eval_seeds.clone();
        }
        if !self.alphas.is_empty() {
            c.eval.alphas = self.alphas.clone();
        }
        if !self.strategies.is_empty() {
            c.eval.strategies = self.strategies.clone();
        }
        c.validate()?;
        Ok(c)
    }
}

pub fn run(cli: &Cli) -> Result<(), CliError> {
    let config = cli.overrides.resolve()?;
    match &cli.command {
        Command::Ingest => commands::cmd_ingest(&config),
        Command::Fetch(args) => {
            let mut addresses = args.addresses.clone();
            if args.from_labels {
                let path = config
                    .labels
                    .clone()
                    .ok_or_else(|| CliError::Usage("--from-labels needs --labels".into()))?;
                let file = std::fs::File::open(&path).map_err(|e| CliError::io(&path, e))?;
                let labels = tedge_core::ingest::parse_labels(std::io::BufReader::new(file), &path.display().to_string())?;
                addresses.extend(labels.into_iter().map(|(a, _)| a));
            }
            commands::cmd_fetch(&config, &addresses, args.api_key.clone(), args.network)
        }
        Command::Subgraph => commands::cmd_subgraph(&config),
        Command::Walk => commands::cmd_walk(&config),
        Command::Embed => commands::cmd_embed(&config),
        Command::Classify => commands::cmd_classify(&config),
        Command::Sweep => commands::cmd_sweep(&config),
        Command::Compare => commands::cmd_compare(&config),
        Command::Pipeline => commands::cmd_pipeline(&config),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn flags_override_file_and_defaults() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("cfg.toml");
        std::fs::write(&path, "seed = 4\n[walk]\nwalk_length = 7\nwalks_per_node = 2\n").unwrap();
        let cli = Cli::try_parse_from([
            "tedge",
            "walk",
            "--config",
            path.to_str().unwrap(),
            "--walk-length",
            "3",
            "--ratios",
            "0.6,0.7",
            "--strategy",
            "TBS+WBS",
        ])
        .unwrap();
        let c = cli.overrides.resolve().unwrap();
        assert_eq!(c.seed, 4);
        assert_eq!(c.walk.walk_length, 3);
        assert_eq!(c.walk.walks_per_node, 2);
        assert_eq!(c.eval.ratios, vec![0.6, 0.7]);
        assert_eq!(c.strategy.kind, StrategyKind::TbsWbs);
        assert_eq!(c.subgraph.k_out, 3);
    }

    #[test]
    fn workers_need_nondeterministic_mode() {
        let cli = Cli::try_parse_from(["tedge", "embed", "--workers", "4"]).unwrap();
        assert!(matches!(cli.overrides.resolve(), Err(CliError::Usage(_))));
        let cli = Cli::try_parse_from(["tedge", "embed", "--workers", "4", "--nondeterministic"]).unwrap();
        assert_eq!(cli.overrides.resolve().unwrap().train_config(0).workers, 4);
    }
}
