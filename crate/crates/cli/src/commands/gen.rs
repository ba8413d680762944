//! `gen`: render single sounds from random parameter vectors.

use std::path::PathBuf;

use clap::Args;
use doppel_core::sampler::{render_seed, sample_params};
use doppel_core::tensor::write_tensor;
use doppel_core::wav::write_wav;
use doppel_core::{build_architecture, ArchitectureName, BatchKey, Error, RenderConfig, Result, Synth, WavFormat};
use serde::{Deserialize, Serialize};

use super::{parse_arch, parse_format, Run};
use crate::config::{default_seed, layered};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct GenConfig {
    pub arch: ArchitectureName,
    pub count: usize,
    pub batch_size: usize,
    pub seed: u64,
    pub sample_rate_hz: u32,
    pub duration_s: f64,
    pub format: WavFormat,
}

impl Default for GenConfig {
    fn default() -> Self {
        Self {
            arch: ArchitectureName::Voice,
            count: 16,
            batch_size: 256,
            seed: 0,
            sample_rate_hz: 16_000,
            duration_s: 1.0,
            format: WavFormat::Pcm16,
        }
    }
}

#[derive(Debug, Args)]
pub struct GenArgs {
    /// Output directory.
    #[arg(long)]
    pub out: PathBuf,
    /// JSON config or a previous run's manifest.
    #[arg(long)]
    pub config: Option<PathBuf>,
    #[arg(long, value_parser = parse_arch)]
    pub arch: Option<ArchitectureName>,
    #[arg(long)]
    pub count: Option<usize>,
    #[arg(long)]
    pub batch_size: Option<usize>,
    #[arg(long)]
    pub seed: Option<u64>,
    #[arg(long)]
    pub sample_rate: Option<u32>,
    #[arg(long)]
    pub duration: Option<f64>,
    /// `pcm16` or `float32`.
    #[arg(long, value_parser = parse_format)]
    pub format: Option<WavFormat>,
}

pub fn resolve(args: &GenArgs) -> Result<GenConfig> {
    let defaults = GenConfig {
        seed: default_seed()?,
        ..GenConfig::default()
    };
    let mut c = layered(defaults, args.config.as_deref(), "gen")?;
    if let Some(v) = args.arch {
        c.arch = v;
    }
    if let Some(v) = args.count {
        c.count = v;
    }
    if let Some(v) = args.batch_size {
        c.batch_size = v;
    }
    if let Some(v) = args.seed {
        c.seed = v;
    }
    if let Some(v) = args.sample_rate {
        c.sample_rate_hz = v;
    }
    if let Some(v) = args.duration {
        c.duration_s = v;
    }
    if let Some(v) = args.format {
        c.format = v;
    }
    if c.count == 0 || c.batch_size == 0 {
        return Err(Error::InvalidArgument("count and batch_size must be positive".into()));
    }
    Ok(c)
}

pub fn run(args: &GenArgs) -> Result<PathBuf> {
    let c = resolve(args)?;
    let arch = build_architecture(c.arch);
    let synth = Synth::new(arch.clone())?;
    let mut run = Run::start(&args.out)?;
    let mut params = Vec::with_capacity(c.count * arch.num_params());
    let batches = c.count.div_ceil(c.batch_size);
    for b in 0..batches {
        let k = c.batch_size.min(c.count - b * c.batch_size);
        let key = BatchKey::at(c.seed, 0, b as u64);
        let theta = sample_params(k, &arch, key)?;
        let cfg = RenderConfig {
            sample_rate_hz: c.sample_rate_hz,
            duration_s: c.duration_s,
            seed: render_seed(key),
            row_offset: 0,
        };
        let audio = synth.render(&theta, &cfg)?;
        for r in 0..k {
            let i = b * c.batch_size + r;
            write_wav(&run.file(format!("{i:05}.wav")), audio.row(r), c.sample_rate_hz, c.format)?;
        }
        params.extend(theta.values().as_slice().iter().map(|&v| v as f32));
    }
    write_tensor(&run.tensor("params"), &[c.count, arch.num_params()], params)?;
    doppel_core::tensor::write_atomic(&run.file("architecture.json"), arch.to_json()?.as_bytes())?;
    eprintln!("wrote {} sounds to {}", c.count, args.out.display());
    run.finish("gen", &c, Some(c.seed))
}
