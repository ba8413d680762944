//! `metrics`: dataset and model characterization on existing files.

use std::path::{Path, PathBuf};

use clap::{Args, Subcommand};
use doppel_core::metrics::{
    causal_uncertainty, clip_flatness, clip_flux, fit_gaussian, frechet_distance, mix_segments, ProbabilityMatrix,
};
use doppel_core::tensor::read_matrix;
use doppel_core::wav::{read_wav, write_wav};
use doppel_core::{EmbeddingMatrix, Error, Result, WavFormat};
use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};

use super::{parse_format, write_csv, write_json, Run};
use crate::config::{default_seed, layered};

#[derive(Debug, Subcommand)]
pub enum MetricsCommand {
    /// Fréchet distance between Gaussian fits of two embedding sets.
    Fad(FadArgs),
    /// Per-row max probability, normalized entropy and top-2 gap.
    Cu(CuArgs),
    /// Mean spectral flux of each WAV.
    Flux(ClipArgs),
    /// Mean spectral flatness of each WAV.
    Flatness(ClipArgs),
    /// Layer random whole-second segments drawn from WAVs into one clip.
    Mix(MixArgs),
}

#[derive(Debug, Args)]
pub struct Common {
    #[arg(long)]
    pub out: PathBuf,
    #[arg(long)]
    pub config: Option<PathBuf>,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct FadConfig {
    /// Embedding matrices (tensor stem or CSV), one row per sample.
    pub a: PathBuf,
    pub b: PathBuf,
}

#[derive(Debug, Args)]
pub struct FadArgs {
    #[command(flatten)]
    pub common: Common,
    #[arg(long)]
    pub a: Option<PathBuf>,
    #[arg(long)]
    pub b: Option<PathBuf>,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct CuConfig {
    /// Probability matrix, one row per example.
    pub probs: PathBuf,
}

#[derive(Debug, Args)]
pub struct CuArgs {
    #[command(flatten)]
    pub common: Common,
    #[arg(long)]
    pub probs: Option<PathBuf>,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ClipConfig {
    pub inputs: Vec<PathBuf>,
}

#[derive(Debug, Args)]
pub struct ClipArgs {
    #[command(flatten)]
    pub common: Common,
    /// WAV files.
    pub inputs: Vec<PathBuf>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct MixConfig {
    pub inputs: Vec<PathBuf>,
    pub segments: usize,
    pub seed: u64,
    pub format: WavFormat,
}

impl Default for MixConfig {
    fn default() -> Self {
        Self {
            inputs: Vec::new(),
            segments: 4,
            seed: 0,
            format: WavFormat::Pcm16,
        }
    }
}

#[derive(Debug, Args)]
pub struct MixArgs {
    #[command(flatten)]
    pub common: Common,
    pub inputs: Vec<PathBuf>,
    #[arg(long)]
    pub segments: Option<usize>,
    #[arg(long)]
    pub seed: Option<u64>,
    #[arg(long, value_parser = parse_format)]
    pub format: Option<WavFormat>,
}

#[derive(Debug, Serialize)]
struct FadReport {
    fad: f64,
    n_a: usize,
    n_b: usize,
    dim: usize,
    /// Fewer samples than dimensions on either side.
    underdetermined: bool,
}

#[derive(Debug, Serialize)]
struct CuRow {
    row: usize,
    max_prob: f64,
    entropy: f64,
    top2_gap: f64,
}

#[derive(Debug, Serialize)]
struct ClipRow {
    file: String,
    value: f64,
}

fn config<T: Serialize + DeserializeOwned + Default>(common: &Common, name: &str) -> Result<T> {
    layered(T::default(), common.config.as_deref(), name)
}

fn require(p: &Path, what: &str) -> Result<()> {
    if p.as_os_str().is_empty() {
        return Err(Error::InvalidArgument(format!("missing --{what}")));
    }
    Ok(())
}

pub fn run(cmd: &MetricsCommand) -> Result<PathBuf> {
    match cmd {
        MetricsCommand::Fad(args) => fad(args),
        MetricsCommand::Cu(args) => cu(args),
        MetricsCommand::Flux(args) => clip_metric(args, "metrics flux", "flux.csv", clip_flux),
        MetricsCommand::Flatness(args) => clip_metric(args, "metrics flatness", "flatness.csv", clip_flatness),
        MetricsCommand::Mix(args) => mix(args),
    }
}

fn fad(args: &FadArgs) -> Result<PathBuf> {
    let mut c: FadConfig = config(&args.common, "metrics fad")?;
    if let Some(v) = &args.a {
        c.a = v.clone();
    }
    if let Some(v) = &args.b {
        c.b = v.clone();
    }
    require(&c.a, "a")?;
    require(&c.b, "b")?;
    let sa = fit_gaussian(&EmbeddingMatrix::new(read_matrix(&c.a)?)?)?;
    let sb = fit_gaussian(&EmbeddingMatrix::new(read_matrix(&c.b)?)?)?;
    if sa.is_underdetermined() || sb.is_underdetermined() {
        eprintln!("warning: fewer samples than dimensions; covariance is rank-deficient");
    }
    let report = FadReport {
        fad: frechet_distance(&sa, &sb)?,
        n_a: sa.n,
        n_b: sb.n,
        dim: sa.dim(),
        underdetermined: sa.is_underdetermined() || sb.is_underdetermined(),
    };
    println!("{}", report.fad);
    let mut run = Run::start(&args.common.out)?;
    write_json(&run.file("fad.json"), &report)?;
    run.finish("metrics fad", &c, None)
}

fn cu(args: &CuArgs) -> Result<PathBuf> {
    let mut c: CuConfig = config(&args.common, "metrics cu")?;
    if let Some(v) = &args.probs {
        c.probs = v.clone();
    }
    require(&c.probs, "probs")?;
    let p = ProbabilityMatrix::new(read_matrix(&c.probs)?)?;
    let rows: Vec<CuRow> = causal_uncertainty(&p)
        .into_iter()
        .enumerate()
        .map(|(row, u)| CuRow {
            row,
            max_prob: u.max_prob,
            entropy: u.entropy,
            top2_gap: u.top2_gap,
        })
        .collect();
    let mut run = Run::start(&args.common.out)?;
    write_csv(&run.file("cu.csv"), &rows)?;
    run.finish("metrics cu", &c, None)
}

fn clip_metric(args: &ClipArgs, name: &str, file: &str, f: fn(&[f32]) -> Result<f64>) -> Result<PathBuf> {
    let mut c: ClipConfig = config(&args.common, name)?;
    if !args.inputs.is_empty() {
        c.inputs = args.inputs.clone();
    }
    if c.inputs.is_empty() {
        return Err(Error::InvalidArgument("no input WAV files".into()));
    }
    let rows = c
        .inputs
        .iter()
        .map(|p| {
            let (x, _) = read_wav(p)?;
            Ok(ClipRow {
                file: p.display().to_string(),
                value: f(&x)?,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    let mut run = Run::start(&args.common.out)?;
    write_csv(&run.file(file), &rows)?;
    run.finish(name, &c, None)
}

fn mix(args: &MixArgs) -> Result<PathBuf> {
    let defaults = MixConfig {
        seed: default_seed()?,
        ..MixConfig::default()
    };
    let mut c = layered(defaults, args.common.config.as_deref(), "metrics mix")?;
    if !args.inputs.is_empty() {
        c.inputs = args.inputs.clone();
    }
    if let Some(v) = args.segments {
        c.segments = v;
    }
    if let Some(v) = args.seed {
        c.seed = v;
    }
    if let Some(v) = args.format {
        c.format = v;
    }
    if c.inputs.is_empty() {
        return Err(Error::InvalidArgument("no input WAV files".into()));
    }
    let mut clips = Vec::with_capacity(c.inputs.len());
    let mut rate = None;
    for p in &c.inputs {
        let (x, sr) = read_wav(p)?;
        if *rate.get_or_insert(sr) != sr {
            return Err(Error::InvalidArgument(format!(
                "{} has sample rate {sr}, expected {}",
                p.display(),
                rate.unwrap()
            )));
        }
        clips.push(x);
    }
    let sr = rate.expect("non-empty");
    let refs: Vec<&[f32]> = clips.iter().map(Vec::as_slice).collect();
    let mixed = mix_segments(&refs, sr, c.segments, c.seed)?;
    let mut run = Run::start(&args.common.out)?;
    write_wav(&run.file("mix.wav"), &mixed, sr, c.format)?;
    run.finish("metrics mix", &c, Some(c.seed))
}
