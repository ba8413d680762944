//! `simcurve`: mean pair similarity against δ.

use std::path::PathBuf;

use clap::Args;
use doppel_core::metrics::{cosine_similarity_curve, synth_similarity_curve};
use doppel_core::tensor::read_matrix;
use doppel_core::{build_architecture, ArchitectureName, EmbeddingMatrix, Error, Result};
use serde::{Deserialize, Serialize};

use super::{parse_arch, write_csv, Run};
use crate::config::{default_seed, layered};

/// Externally computed embeddings of the two sides at one δ.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EmbeddingPairFiles {
    pub delta: f64,
    pub a: PathBuf,
    pub b: PathBuf,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SimcurveConfig {
    pub arch: ArchitectureName,
    pub deltas: Vec<f64>,
    pub k: usize,
    pub seed: u64,
    pub sample_rate_hz: u32,
    pub duration_s: f64,
    /// When non-empty, cosines come from these files instead of rendering.
    pub embeddings: Vec<EmbeddingPairFiles>,
}

impl Default for SimcurveConfig {
    fn default() -> Self {
        Self {
            arch: ArchitectureName::Voice,
            deltas: vec![0.0, 0.01, 0.05, 0.1, 0.25, 0.5],
            k: 256,
            seed: 0,
            sample_rate_hz: 16_000,
            duration_s: 1.0,
            embeddings: Vec::new(),
        }
    }
}

#[derive(Debug, Serialize)]
struct Row {
    delta: f64,
    mean_cosine: f64,
    mean_param_l2: Option<f64>,
}

fn parse_pair(s: &str) -> std::result::Result<EmbeddingPairFiles, String> {
    let mut parts = s.splitn(3, ':');
    let (Some(d), Some(a), Some(b)) = (parts.next(), parts.next(), parts.next()) else {
        return Err("expected DELTA:A_PATH:B_PATH".into());
    };
    Ok(EmbeddingPairFiles {
        delta: d.parse().map_err(|_| format!("bad delta `{d}`"))?,
        a: a.into(),
        b: b.into(),
    })
}

#[derive(Debug, Args)]
pub struct SimcurveArgs {
    #[arg(long)]
    pub out: PathBuf,
    #[arg(long)]
    pub config: Option<PathBuf>,
    #[arg(long, value_parser = parse_arch)]
    pub arch: Option<ArchitectureName>,
    /// Comma-separated δ grid.
    #[arg(long, value_delimiter = ',')]
    pub deltas: Option<Vec<f64>>,
    /// Pairs per δ.
    #[arg(long)]
    pub k: Option<usize>,
    #[arg(long)]
    pub seed: Option<u64>,
    /// External embeddings as `DELTA:A:B` (tensor stem or CSV); repeatable.
    #[arg(long = "embeddings", value_parser = parse_pair)]
    pub embeddings: Vec<EmbeddingPairFiles>,
}

pub fn resolve(args: &SimcurveArgs) -> Result<SimcurveConfig> {
    let defaults = SimcurveConfig {
        seed: default_seed()?,
        ..SimcurveConfig::default()
    };
    let mut c = layered(defaults, args.config.as_deref(), "simcurve")?;
    if let Some(v) = args.arch {
        c.arch = v;
    }
    if let Some(v) = &args.deltas {
        c.deltas = v.clone();
    }
    if let Some(v) = args.k {
        c.k = v;
    }
    if let Some(v) = args.seed {
        c.seed = v;
    }
    if !args.embeddings.is_empty() {
        c.embeddings = args.embeddings.clone();
    }
    if c.embeddings.is_empty() && c.deltas.is_empty() {
        return Err(Error::InvalidArgument("empty δ grid".into()));
    }
    Ok(c)
}

fn load(p: &std::path::Path) -> Result<EmbeddingMatrix> {
    EmbeddingMatrix::new(read_matrix(p)?)
}

pub fn run(args: &SimcurveArgs) -> Result<PathBuf> {
    let c = resolve(args)?;
    let rows: Vec<Row> = if c.embeddings.is_empty() {
        synth_similarity_curve(&build_architecture(c.arch), &c.deltas, c.k, c.seed, c.sample_rate_hz, c.duration_s)?
            .into_iter()
            .map(|p| Row {
                delta: p.delta,
                mean_cosine: p.mean_cosine,
                mean_param_l2: Some(p.mean_param_l2),
            })
            .collect()
    } else {
        let pairs = c
            .embeddings
            .iter()
            .map(|e| Ok((e.delta, load(&e.a)?, load(&e.b)?)))
            .collect::<Result<Vec<_>>>()?;
        cosine_similarity_curve(&pairs)?
            .into_iter()
            .map(|(delta, mean_cosine)| Row {
                delta,
                mean_cosine,
                mean_param_l2: None,
            })
            .collect()
    };
    let mut run = Run::start(&args.out)?;
    write_csv(&run.file("simcurve.csv"), &rows)?;
    run.finish("simcurve", &c, Some(c.seed))
}
