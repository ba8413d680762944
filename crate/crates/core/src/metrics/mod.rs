//! Dataset characterization: pair similarity, PCA, Fréchet distance,
//! classifier-uncertainty summaries, spectral descriptors and segment mixing.

mod curve;
mod fad;
mod mix;
mod similarity;
mod spectral;
mod uncertainty;

pub use curve::{mel_embeddings, synth_similarity_curve, CurvePoint};
pub use fad::{fit_gaussian, frechet_distance, GaussianStats};
pub use mix::mix_segments;
pub use similarity::{cosine_similarity_curve, mean_cosine, pca_2d, Pca2d};
pub use spectral::{clip_flatness, clip_flux, spectral_flatness, spectral_flux, stft_magnitudes};
pub use uncertainty::{causal_uncertainty, CausalUncertainty, ProbabilityMatrix};
