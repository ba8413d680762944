use std::sync::Arc;

use serde::Serialize;

use super::mean_cosine;
use crate::contrastive::EmbeddingMatrix;
use crate::error::Result;
use crate::frontend::{MelFrontend, MEL_BANDS, MEL_FRAMES};
use crate::rng::BatchKey;
use crate::sampler::{mean_param_distance, DoppelgangerSampler};
use crate::synth::{ArchitectureSpec, AudioBatch};
use crate::tensor::Matrix;

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct CurvePoint {
    pub delta: f64,
    pub mean_cosine: f64,
    pub mean_param_l2: f64,
}

/// Built-in embedding: the flattened log-mel spectrogram. Values sit at or
/// above `ln 0.01`, so no row is ever the zero vector.
pub fn mel_embeddings(frontend: &MelFrontend, audio: &AudioBatch) -> Result<EmbeddingMatrix> {
    let mel = frontend.batch(audio)?;
    let data = mel.as_slice().iter().map(|&v| v as f64).collect();
    EmbeddingMatrix::new(Matrix::from_vec(mel.len(), MEL_FRAMES * MEL_BANDS, data)?)
}

/// Pair similarity as a function of δ. Every δ reuses the same base
/// parameters and noise draws, so the points differ only through δ.
pub fn synth_similarity_curve(
    arch: &Arc<ArchitectureSpec>,
    deltas: &[f64],
    k: usize,
    seed: u64,
    sample_rate_hz: u32,
    duration_s: f64,
) -> Result<Vec<CurvePoint>> {
    let frontend = MelFrontend::new();
    let key = BatchKey::new(seed);
    deltas
        .iter()
        .map(|&delta| {
            let sampler = DoppelgangerSampler::new(arch.clone(), delta, sample_rate_hz, duration_s)?;
            let (a, b, pairs) = sampler.batch(k, key)?;
            let (ea, eb) = (mel_embeddings(&frontend, &a)?, mel_embeddings(&frontend, &b)?);
            Ok(CurvePoint {
                delta,
                mean_cosine: mean_cosine(&ea, &eb)?,
                mean_param_l2: mean_param_distance(&pairs),
            })
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::synth::{build_architecture, ArchitectureName};

    #[test]
    fn zero_delta_is_exactly_one() {
        let arch = build_architecture(ArchitectureName::Voice);
        let c = synth_similarity_curve(&arch, &[0.0], 8, 1, 16_000, 1.0).unwrap();
        assert_eq!(c.len(), 1);
        assert!((c[0].mean_cosine - 1.0).abs() < 1e-12);
        assert_eq!(c[0].mean_param_l2, 0.0);
    }
}
