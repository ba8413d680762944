//! Self-supervised audio representation learning from synthesized
//! "doppelganger" pairs: a batch modular synthesizer, a pair sampler,
//! a log-mel frontend, an augmentation chain, contrastive losses with a
//! toy trainer, and evaluation metrics.
//!
//! Everything random is a pure function of a seed and a position
//! ([`rng::BatchKey`]), so any batch can be regenerated on its own.

// `!(x > 0.0)` is used on purpose: it also rejects NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod contrastive;
pub mod dsp;
pub mod error;
pub mod frontend;
pub mod fx;
pub mod metrics;
pub mod rng;
pub mod sampler;
pub mod stream;
pub mod synth;
pub mod tensor;
pub mod wav;

pub use contrastive::{EmbeddingMatrix, LossConfig, TrainConfig};
pub use error::{Error, ErrorKind, Result};
pub use frontend::{log_mel, MelSpec};
pub use fx::FxConfig;
pub use metrics::{GaussianStats, ProbabilityMatrix};
pub use rng::BatchKey;
pub use sampler::{generate_pair_batch, DoppelgangerSampler, PairBatch};
pub use stream::{PairStream, PairStreamConfig};
pub use synth::{
    build_architecture, ArchitectureName, ArchitectureSpec, AudioBatch, ControlSignal, ParamMatrix, RenderConfig,
    Synth,
};
pub use tensor::Matrix;
pub use wav::WavFormat;

/// Crate version, recorded in run manifests.
pub const VERSION: &str = env!("CARGO_PKG_VERSION");
