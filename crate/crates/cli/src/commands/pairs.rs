//! `pairs`: write doppelganger pairs exactly as the pair stream yields them.

use std::path::PathBuf;

use clap::Args;
use doppel_core::frontend::{log_mel, MEL_BANDS, MEL_FRAMES};
use doppel_core::fx::FxConfig;
use doppel_core::stream::{PairData, StreamOutput};
use doppel_core::tensor::write_tensor;
use doppel_core::wav::write_wav;
use doppel_core::{ArchitectureName, Error, PairStream, PairStreamConfig, Result, WavFormat};
use serde::{Deserialize, Serialize};

use super::{parse_arch, parse_format, Run};
use crate::config::{default_seed, layered};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PairsConfig {
    /// Stream settings; `sounds_per_epoch × epochs` pairs are written.
    pub stream: PairStreamConfig,
    pub format: WavFormat,
    /// Also export log-mel tensors of both sides.
    pub mel: bool,
}

impl Default for PairsConfig {
    fn default() -> Self {
        Self {
            stream: PairStreamConfig {
                batch_size: 64,
                sounds_per_epoch: 16,
                epochs: Some(1),
                ..PairStreamConfig::default()
            },
            format: WavFormat::Pcm16,
            mel: false,
        }
    }
}

#[derive(Debug, Args)]
pub struct PairsArgs {
    #[arg(long)]
    pub out: PathBuf,
    #[arg(long)]
    pub config: Option<PathBuf>,
    #[arg(long, value_parser = parse_arch)]
    pub arch: Option<ArchitectureName>,
    /// Number of pairs (sounds per epoch of the underlying stream).
    #[arg(long)]
    pub count: Option<usize>,
    #[arg(long)]
    pub delta: Option<f64>,
    #[arg(long)]
    pub batch_size: Option<usize>,
    #[arg(long)]
    pub seed: Option<u64>,
    #[arg(long)]
    pub sample_rate: Option<u32>,
    #[arg(long)]
    pub duration: Option<f64>,
    #[arg(long, value_parser = parse_format)]
    pub format: Option<WavFormat>,
    /// Apply the default augmentation chain (when the config has none).
    #[arg(long)]
    pub fx: bool,
    /// Export log-mel tensors.
    #[arg(long)]
    pub mel: bool,
}

pub fn resolve(args: &PairsArgs) -> Result<PairsConfig> {
    let mut defaults = PairsConfig::default();
    defaults.stream.seed = default_seed()?;
    let mut c = layered(defaults, args.config.as_deref(), "pairs")?;
    let s = &mut c.stream;
    if let Some(v) = args.arch {
        s.arch = v;
    }
    if let Some(v) = args.count {
        s.sounds_per_epoch = v;
    }
    if let Some(v) = args.delta {
        s.delta = v;
    }
    if let Some(v) = args.batch_size {
        s.batch_size = v;
    }
    if let Some(v) = args.seed {
        s.seed = v;
    }
    if let Some(v) = args.sample_rate {
        s.sample_rate_hz = v;
    }
    if let Some(v) = args.duration {
        s.duration_s = v;
    }
    if args.fx && s.fx.is_none() {
        s.fx = Some(FxConfig::default());
    }
    s.epochs.get_or_insert(1);
    s.output = StreamOutput::Audio;
    if let Some(v) = args.format {
        c.format = v;
    }
    c.mel |= args.mel;
    c.stream.validate()?;
    Ok(c)
}

pub fn run(args: &PairsArgs) -> Result<PathBuf> {
    let c = resolve(args)?;
    let stream = PairStream::new(c.stream.clone())?;
    let mut run = Run::start(&args.out)?;
    let (mut theta, mut theta1, mut theta2) = (Vec::new(), Vec::new(), Vec::new());
    let (mut mel_a, mut mel_b) = (Vec::new(), Vec::new());
    let mut n = 0usize;
    let mut n_params = 0usize;
    for item in stream {
        let item = item?;
        let PairData::Audio(a, b) = &item.data else {
            return Err(Error::InvalidArgument("pair stream did not yield audio".into()));
        };
        for r in 0..a.len() {
            let i = n + r;
            write_wav(&run.file(format!("{i:05}_a.wav")), a.row(r), a.sample_rate_hz(), c.format)?;
            write_wav(&run.file(format!("{i:05}_b.wav")), b.row(r), b.sample_rate_hz(), c.format)?;
        }
        if c.mel {
            mel_a.extend(log_mel(a)?.into_vec());
            mel_b.extend(log_mel(b)?.into_vec());
        }
        let p = &item.params;
        n_params = p.theta.values().cols();
        for (dst, m) in [(&mut theta, &p.theta), (&mut theta1, &p.theta1), (&mut theta2, &p.theta2)] {
            dst.extend(m.values().as_slice().iter().map(|&v| v as f32));
        }
        n += a.len();
    }
    for (stem, data) in [("theta", theta), ("theta1", theta1), ("theta2", theta2)] {
        write_tensor(&run.tensor(stem), &[n, n_params], data)?;
    }
    if c.mel {
        write_tensor(&run.tensor("mel_a"), &[n, MEL_FRAMES, MEL_BANDS], mel_a)?;
        write_tensor(&run.tensor("mel_b"), &[n, MEL_FRAMES, MEL_BANDS], mel_b)?;
    }
    eprintln!("wrote {n} pairs to {}", args.out.display());
    run.finish("pairs", &c, Some(c.stream.seed))
}
