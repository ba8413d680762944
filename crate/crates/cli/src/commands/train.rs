//! `train-toy`: desk-scale contrastive training on live pairs.

use std::path::PathBuf;

use clap::Args;
use doppel_core::contrastive::{train_toy, write_trace_csv, EncoderSpec, ToyConfig};
use doppel_core::fx::FxConfig;
use doppel_core::tensor::write_tensor;
use doppel_core::{ArchitectureName, Result};

use super::{parse_arch, Run};
use crate::config::{default_seed, layered};

#[derive(Debug, Args)]
pub struct TrainArgs {
    #[arg(long)]
    pub out: PathBuf,
    #[arg(long)]
    pub config: Option<PathBuf>,
    #[arg(long, value_parser = parse_arch)]
    pub arch: Option<ArchitectureName>,
    #[arg(long)]
    pub delta: Option<f64>,
    #[arg(long)]
    pub seed: Option<u64>,
    #[arg(long)]
    pub epochs: Option<u64>,
    #[arg(long)]
    pub sounds_per_epoch: Option<usize>,
    #[arg(long)]
    pub batch_size: Option<usize>,
    #[arg(long)]
    pub embedding_dim: Option<usize>,
    /// Hidden width; selects the two-layer perceptron instead of a linear map.
    #[arg(long)]
    pub hidden: Option<usize>,
    #[arg(long)]
    pub lr: Option<f64>,
    /// Apply the default augmentation chain (when the config has none).
    #[arg(long)]
    pub fx: bool,
}

pub fn resolve(args: &TrainArgs) -> Result<ToyConfig> {
    let defaults = ToyConfig {
        seed: default_seed()?,
        ..ToyConfig::default()
    };
    let mut c = layered(defaults, args.config.as_deref(), "train-toy")?;
    if let Some(v) = args.arch {
        c.arch = v;
    }
    if let Some(v) = args.delta {
        c.delta = v;
    }
    if let Some(v) = args.seed {
        c.seed = v;
    }
    if let Some(v) = args.epochs {
        c.train.epochs = v;
    }
    if let Some(v) = args.sounds_per_epoch {
        c.train.sounds_per_epoch = v;
    }
    if let Some(v) = args.batch_size {
        c.train.batch_size = v;
    }
    if let Some(v) = args.embedding_dim {
        c.embedding_dim = v;
    }
    if let Some(hidden) = args.hidden {
        c.encoder = EncoderSpec::Mlp { hidden };
    }
    if let Some(v) = args.lr {
        c.train.base_lr = Some(v);
    }
    if args.fx && c.fx.is_none() {
        c.fx = Some(FxConfig::default());
    }
    c.train.validate()?;
    Ok(c)
}

pub fn run(args: &TrainArgs) -> Result<PathBuf> {
    let c = resolve(args)?;
    let outcome = train_toy(&c)?;
    let mut run = Run::start(&args.out)?;
    write_trace_csv(&run.file("trace.csv"), &outcome.trace)?;
    let weights = outcome.encoder.params();
    write_tensor(&run.tensor("encoder"), &[weights.len()], weights.iter().map(|&w| w as f32))?;
    if let Some(v) = outcome.final_val() {
        eprintln!("final validation: align {:.4}, unif {:.4}", v.align, v.unif);
    }
    run.finish("train-toy", &c, Some(c.seed))
}
