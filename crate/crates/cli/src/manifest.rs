//! Run manifests: a JSON record written next to a command's outputs. Any
//! manifest can be passed back as `--config` to repeat the run.

use std::path::{Path, PathBuf};

use doppel_core::tensor::write_atomic;
use doppel_core::{Result, VERSION};
use serde::{Deserialize, Serialize};
use serde_json::Value;

pub const MANIFEST_FILE: &str = "manifest.json";

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct RunManifest {
    pub command: String,
    pub version: String,
    pub seed: Option<u64>,
    pub threads: usize,
    pub wall_time_s: f64,
    pub config: Value,
    /// Paths relative to the output directory.
    pub outputs: Vec<PathBuf>,
}

impl RunManifest {
    pub fn new(command: &str, config: &impl Serialize, seed: Option<u64>) -> Result<Self> {
        Ok(Self {
            command: command.to_string(),
            version: VERSION.to_string(),
            seed,
            threads: rayon::current_num_threads(),
            wall_time_s: 0.0,
            config: serde_json::to_value(config)?,
            outputs: Vec::new(),
        })
    }

    pub fn write(&self, out_dir: &Path) -> Result<PathBuf> {
        let path = out_dir.join(MANIFEST_FILE);
        write_atomic(&path, serde_json::to_string_pretty(self)?.as_bytes())?;
        Ok(path)
    }
}
