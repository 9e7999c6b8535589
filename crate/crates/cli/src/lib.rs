//! Staged command-line pipeline over a work directory: ingest, subgraph,
//! walk, embed, classify, plus the alpha sweep and strategy comparison.

pub mod args;
pub mod commands;
pub mod config;
pub mod error;
pub mod manifest;

pub use commands::{cmd_classify, cmd_compare, cmd_embed, cmd_fetch, cmd_ingest, cmd_pipeline, cmd_subgraph, cmd_sweep, cmd_walk};
pub use config::PipelineConfig;
pub use error::CliError;
