//! Alignment and uniformity objectives on embeddings, the learning-rate
//! schedule, and a small trainer that runs the full pair-generation loop.

mod embedding;
mod encoder;
mod loss;
mod schedule;
mod train;

pub use embedding::EmbeddingMatrix;
pub use encoder::{Activations, Encoder, EncoderSpec, Linear, Mlp};
pub use loss::{
    alignment_loss, alignment_with_grad, total_loss, total_with_grad, uniformity_loss, uniformity_with_grad,
    LossConfig, LossValue,
};
pub use schedule::{lr_at, TrainConfig};
pub use train::{mel_features, train_toy, write_trace_csv, Split, ToyConfig, TraceRow, TrainOutcome};
