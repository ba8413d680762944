//! Fixtures shared by the benchmarks.

use doppel_core::sampler::{render_seed, sample_params};
use doppel_core::{build_architecture, ArchitectureName, AudioBatch, BatchKey, ParamMatrix, RenderConfig, Synth};

pub const SAMPLE_RATE: u32 = 16_000;

/// Random parameters and the render settings the sampler would use.
pub fn params(arch: ArchitectureName, k: usize, seed: u64) -> (Synth, ParamMatrix, RenderConfig) {
    let spec = build_architecture(arch);
    let key = BatchKey::new(seed);
    let theta = sample_params(k, &spec, key).expect("valid k");
    let cfg = RenderConfig {
        seed: render_seed(key),
        ..RenderConfig::default()
    };
    (Synth::new(spec).expect("built-in architecture"), theta, cfg)
}

/// `k` one-second Voice sounds.
pub fn voice_audio(k: usize, seed: u64) -> AudioBatch {
    let (synth, theta, cfg) = params(ArchitectureName::Voice, k, seed);
    synth.render(&theta, &cfg).expect("render")
}
