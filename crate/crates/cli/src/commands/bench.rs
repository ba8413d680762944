//! `bench`: synthesis throughput on the current thread pool.

use std::path::PathBuf;
use std::time::Instant;

use clap::Args;
use doppel_core::sampler::{render_seed, sample_params};
use doppel_core::{build_architecture, ArchitectureName, BatchKey, Error, RenderConfig, Result, Synth};
use serde::{Deserialize, Serialize};

use super::{parse_arch, write_json, Run};
use crate::config::{default_seed, layered};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct BenchConfig {
    pub arch: ArchitectureName,
    pub batch_size: usize,
    /// Minimum measurement time; at least one batch is always rendered.
    pub seconds: f64,
    pub seed: u64,
    pub sample_rate_hz: u32,
    pub duration_s: f64,
}

impl Default for BenchConfig {
    fn default() -> Self {
        Self {
            arch: ArchitectureName::Voice,
            batch_size: 256,
            seconds: 3.0,
            seed: 0,
            sample_rate_hz: 16_000,
            duration_s: 1.0,
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct BenchReport {
    pub arch: ArchitectureName,
    pub batch_size: usize,
    pub threads: usize,
    pub batches: usize,
    pub sounds: usize,
    pub wall_s: f64,
    pub sounds_per_sec: f64,
    /// Seconds of audio produced per second of wall time.
    pub realtime_factor: f64,
}

#[derive(Debug, Args)]
pub struct BenchArgs {
    /// Optional output directory for `bench.json` and a manifest.
    #[arg(long)]
    pub out: Option<PathBuf>,
    #[arg(long)]
    pub config: Option<PathBuf>,
    #[arg(long, value_parser = parse_arch)]
    pub arch: Option<ArchitectureName>,
    #[arg(long)]
    pub batch_size: Option<usize>,
    #[arg(long)]
    pub seconds: Option<f64>,
    #[arg(long)]
    pub seed: Option<u64>,
}

pub fn resolve(args: &BenchArgs) -> Result<BenchConfig> {
    let defaults = BenchConfig {
        seed: default_seed()?,
        ..BenchConfig::default()
    };
    let mut c = layered(defaults, args.config.as_deref(), "bench")?;
    if let Some(v) = args.arch {
        c.arch = v;
    }
    if let Some(v) = args.batch_size {
        c.batch_size = v;
    }
    if let Some(v) = args.seconds {
        c.seconds = v;
    }
    if let Some(v) = args.seed {
        c.seed = v;
    }
    if c.batch_size == 0 || c.seconds.is_nan() || c.seconds < 0.0 {
        return Err(Error::InvalidArgument("batch_size must be positive and seconds non-negative".into()));
    }
    Ok(c)
}

pub fn measure(c: &BenchConfig) -> Result<BenchReport> {
    let arch = build_architecture(c.arch);
    let synth = Synth::new(arch.clone())?;
    let started = Instant::now();
    let mut batches = 0usize;
    loop {
        let key = BatchKey::at(c.seed, 0, batches as u64);
        let theta = sample_params(c.batch_size, &arch, key)?;
        let cfg = RenderConfig {
            sample_rate_hz: c.sample_rate_hz,
            duration_s: c.duration_s,
            seed: render_seed(key),
            row_offset: 0,
        };
        synth.render(&theta, &cfg)?;
        batches += 1;
        if started.elapsed().as_secs_f64() >= c.seconds {
            break;
        }
    }
    let wall_s = started.elapsed().as_secs_f64();
    let sounds = batches * c.batch_size;
    let sounds_per_sec = sounds as f64 / wall_s;
    Ok(BenchReport {
        arch: c.arch,
        batch_size: c.batch_size,
        threads: rayon::current_num_threads(),
        batches,
        sounds,
        wall_s,
        sounds_per_sec,
        realtime_factor: sounds_per_sec * c.duration_s,
    })
}

pub fn run(args: &BenchArgs) -> Result<Option<PathBuf>> {
    let c = resolve(args)?;
    let report = measure(&c)?;
    println!("{}", serde_json::to_string_pretty(&report)?);
    let Some(out) = &args.out else {
        return Ok(None);
    };
    let mut run = Run::start(out)?;
    write_json(&run.file("bench.json"), &report)?;
    run.finish("bench", &c, Some(c.seed)).map(Some)
}
