//! `manifest.json`: per stage, the effective configuration plus SHA-256
//! digests of everything the stage read and wrote.

use std::collections::BTreeMap;
use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::config::PipelineConfig;
use crate::error::CliError;

pub const MANIFEST_FILE: &str = "manifest.json";

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct Manifest {
    pub tool: String,
    pub version: String,
    pub stages: BTreeMap<String, StageRecord>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct StageRecord {
    pub config: PipelineConfig,
    pub seed: u64,
    pub inputs: BTreeMap<String, String>,
    pub outputs: BTreeMap<String, String>,
}

pub fn sha256_file(path: &Path) -> Result<String, CliError> {
    let bytes = fs::read(path).map_err(|e| CliError::io(path, e))?;
    Ok(Sha256::digest(&bytes).iter().map(|b| format!("{b:02x}")).collect())
}

impl Manifest {
    /// The manifest in `workdir`, or an empty one.
    pub fn load(workdir: &Path) -> Result<Self, CliError> {
        let path = workdir.join(MANIFEST_FILE);
        if !path.exists() {
            return Ok(Self {
                tool: "tedge".into(),
                version: env!("CARGO_PKG_VERSION").into(),
                stages: BTreeMap::new(),
            });
        }
        let text = fs::read_to_string(&path).map_err(|e| CliError::io(&path, e))?;
        serde_json::from_str(&text)
            .map_err(|e| CliError::Usage(format!("corrupt manifest {}: {e}", path.display())))
    }

    pub fn save(&self, workdir: &Path) -> Result<(), CliError> {
        let path = workdir.join(MANIFEST_FILE);
        let mut text = serde_json::to_string_pretty(self).expect("manifest serializes");
        text.push('\n');
        fs::write(&path, text).map_err(|e| CliError::io(&path, e))
    }
}

/// Digests of `inputs` (external paths, recorded as given) and `outputs`
/// (paths relative to `workdir`), stored under `stage`.
pub fn record_stage(
    config: &PipelineConfig,
    stage: &str,
    inputs: &[(String, &Path)],
    outputs: &[&str],
) -> Result<(), CliError> {
    let workdir = &config.workdir;
    let mut manifest = Manifest::load(workdir)?;
    let mut record = StageRecord {
        config: config.clone(),
        seed: config.seed,
        inputs: BTreeMap::new(),
        outputs: BTreeMap::new(),
    };
    for (name, path) in inputs {
        record.inputs.insert(name.clone(), sha256_file(path)?);
    }
    for rel in outputs {
        record.outputs.insert((*rel).to_string(), sha256_file(&workdir.join(rel))?);
    }
    manifest.stages.insert(stage.to_string(), record);
    manifest.save(workdir)
}
