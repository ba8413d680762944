pub mod bench;
pub mod gen;
pub mod metrics;
pub mod pairs;
pub mod simcurve;
pub mod train;

use std::path::{Path, PathBuf};
use std::time::Instant;

use doppel_core::{ArchitectureName, Error, Result, WavFormat};
use serde::Serialize;

use crate::manifest::RunManifest;

pub fn parse_arch(s: &str) -> std::result::Result<ArchitectureName, String> {
    s.parse().map_err(|e: Error| e.to_string())
}

pub fn parse_format(s: &str) -> std::result::Result<WavFormat, String> {
    s.parse().map_err(|e: Error| e.to_string())
}

/// Collects output files for the manifest and times the run.
pub struct Run {
    dir: PathBuf,
    outputs: Vec<PathBuf>,
    started: Instant,
}

impl Run {
    pub fn start(dir: &Path) -> Result<Self> {
        std::fs::create_dir_all(dir).map_err(|source| Error::Io {
            path: dir.into(),
            source,
        })?;
        Ok(Self {
            dir: dir.to_path_buf(),
            outputs: Vec::new(),
            started: Instant::now(),
        })
    }

    /// Absolute path for `name` inside the output directory, recorded as
    /// an output.
    pub fn file(&mut self, name: impl Into<PathBuf>) -> PathBuf {
        let name = name.into();
        let path = self.dir.join(&name);
        self.outputs.push(name);
        path
    }

    /// Records a tensor written by `write_tensor` (data and sidecar).
    pub fn tensor(&mut self, stem: &str) -> PathBuf {
        self.outputs.push(format!("{stem}.f32").into());
        self.outputs.push(format!("{stem}.json").into());
        self.dir.join(stem)
    }

    pub fn finish(self, command: &str, config: &impl Serialize, seed: Option<u64>) -> Result<PathBuf> {
        let mut manifest = RunManifest::new(command, config, seed)?;
        manifest.wall_time_s = self.started.elapsed().as_secs_f64();
        manifest.outputs = self.outputs;
        manifest.write(&self.dir)
    }
}

pub fn write_csv<R: Serialize>(path: &Path, rows: &[R]) -> Result<()> {
    let mut w = Vec::new();
    {
        let mut writer = csv_writer(&mut w);
        for row in rows {
            writer.serialize(row).map_err(|e| format_err(path, e))?;
        }
        writer.flush().map_err(|source| Error::Io {
            path: path.into(),
            source,
        })?;
    }
    doppel_core::tensor::write_atomic(path, &w)
}

fn csv_writer(buf: &mut Vec<u8>) -> csv::Writer<&mut Vec<u8>> {
    csv::Writer::from_writer(buf)
}

fn format_err(path: &Path, e: impl std::fmt::Display) -> Error {
    Error::Format {
        path: path.into(),
        reason: e.to_string(),
    }
}

pub fn write_json(path: &Path, value: &impl Serialize) -> Result<()> {
    doppel_core::tensor::write_atomic(path, serde_json::to_string_pretty(value)?.as_bytes())
}
