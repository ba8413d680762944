//! Stochastic augmentation chain: high-pass, low-pass, pitch shift,
//! circular time shift and reverb, each applied with its own probability.
//!
//! Parameters are drawn once per mini-batch and shared by its rows.

mod filter;
mod pitch;
mod reverb;

use std::path::PathBuf;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::dsp::peak;
use crate::error::{Error, Result};
use crate::frontend::resample_signal;
use crate::rng::{BatchKey, StreamId};
use crate::synth::AudioBatch;
use crate::tensor::Matrix;
use crate::wav::read_wav;
use filter::{Biquad, Pass};

pub use reverb::{default_irs, synthetic_ir, DEFAULT_IR_DECAYS_S};

/// Effects in chain order.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Effect {
    HighPass,
    LowPass,
    PitchShift,
    TimeShift,
    Reverb,
}

impl Effect {
    pub const CHAIN: [Effect; 5] = [
        Effect::HighPass,
        Effect::LowPass,
        Effect::PitchShift,
        Effect::TimeShift,
        Effect::Reverb,
    ];
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct EffectProbabilities {
    pub high_pass: f64,
    pub low_pass: f64,
    pub pitch_shift: f64,
    pub time_shift: f64,
    pub reverb: f64,
}

impl EffectProbabilities {
    pub fn uniform(p: f64) -> Self {
        Self {
            high_pass: p,
            low_pass: p,
            pitch_shift: p,
            time_shift: p,
            reverb: p,
        }
    }

    pub fn get(&self, e: Effect) -> f64 {
        match e {
            Effect::HighPass => self.high_pass,
            Effect::LowPass => self.low_pass,
            Effect::PitchShift => self.pitch_shift,
            Effect::TimeShift => self.time_shift,
            Effect::Reverb => self.reverb,
        }
    }
}

impl Default for EffectProbabilities {
    fn default() -> Self {
        Self::uniform(0.5)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct FxConfig {
    pub high_pass_cutoff_hz: [f64; 2],
    pub low_pass_cutoff_hz: [f64; 2],
    pub pitch_shift_semitones: [f64; 2],
    pub time_shift_fraction: [f64; 2],
    /// WAV files; empty selects the built-in synthetic responses.
    pub impulse_responses: Vec<PathBuf>,
    pub probabilities: EffectProbabilities,
    pub mini_batch_size: usize,
}

impl Default for FxConfig {
    fn default() -> Self {
        Self {
            high_pass_cutoff_hz: [20.0, 800.0],
            low_pass_cutoff_hz: [1200.0, 8000.0],
            pitch_shift_semitones: [-2.0, 2.0],
            time_shift_fraction: [-0.25, 0.25],
            impulse_responses: Vec::new(),
            probabilities: EffectProbabilities::default(),
            mini_batch_size: 100,
        }
    }
}

impl FxConfig {
    pub fn validate(&self) -> Result<()> {
        let ordered = |name: &str, r: [f64; 2]| {
            if r[0].is_finite() && r[1].is_finite() && r[0] <= r[1] {
                Ok(())
            } else {
                Err(Error::invalid(format!("{name} range {r:?} is not ordered")))
            }
        };
        ordered("high-pass cutoff", self.high_pass_cutoff_hz)?;
        ordered("low-pass cutoff", self.low_pass_cutoff_hz)?;
        ordered("pitch shift", self.pitch_shift_semitones)?;
        ordered("time shift", self.time_shift_fraction)?;
        if self.high_pass_cutoff_hz[0] <= 0.0 || self.low_pass_cutoff_hz[0] <= 0.0 {
            return Err(Error::invalid("filter cutoffs must be positive"));
        }
        if self.pitch_shift_semitones.iter().any(|s| s.abs() > 12.0) {
            return Err(Error::invalid("pitch shift is limited to ±12 semitones"));
        }
        if self.time_shift_fraction.iter().any(|s| s.abs() > 1.0) {
            return Err(Error::invalid("time shift fraction is limited to ±1"));
        }
        for e in Effect::CHAIN {
            let p = self.probabilities.get(e);
            if !(0.0..=1.0).contains(&p) {
                return Err(Error::invalid(format!("probability for {e:?} is {p}, outside [0, 1]")));
            }
        }
        if self.mini_batch_size == 0 {
            return Err(Error::invalid("mini-batch size must be at least 1"));
        }
        Ok(())
    }
}

/// Decisions and parameters for one mini-batch.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MiniBatchPlan {
    pub high_pass_hz: Option<f64>,
    pub low_pass_hz: Option<f64>,
    pub pitch_semitones: Option<f64>,
    pub time_shift: Option<f64>,
    /// Index into the impulse-response set.
    pub reverb_ir: Option<usize>,
}

impl MiniBatchPlan {
    pub fn applies(&self, e: Effect) -> bool {
        match e {
            Effect::HighPass => self.high_pass_hz.is_some(),
            Effect::LowPass => self.low_pass_hz.is_some(),
            Effect::PitchShift => self.pitch_semitones.is_some(),
            Effect::TimeShift => self.time_shift.is_some(),
            Effect::Reverb => self.reverb_ir.is_some(),
        }
    }
}

/// Draws the plan for mini-batch `index`; a pure function of its inputs.
pub fn plan_mini_batch(config: &FxConfig, n_irs: usize, seed: u64, index: u64) -> MiniBatchPlan {
    let rng = BatchKey::new(seed).stream(StreamId::Fx);
    let on = |slot: u64, e: Effect| rng.uniform_at(index, slot) < config.probabilities.get(e);
    let draw = |slot: u64, r: [f64; 2]| rng.range_at(index, slot, r[0], r[1]);
    MiniBatchPlan {
        high_pass_hz: on(0, Effect::HighPass).then(|| draw(5, config.high_pass_cutoff_hz)),
        low_pass_hz: on(1, Effect::LowPass).then(|| draw(6, config.low_pass_cutoff_hz)),
        pitch_semitones: on(2, Effect::PitchShift).then(|| draw(7, config.pitch_shift_semitones)),
        time_shift: on(3, Effect::TimeShift).then(|| draw(8, config.time_shift_fraction)),
        reverb_ir: (n_irs > 0 && on(4, Effect::Reverb)).then(|| rng.index_at(index, 9, n_irs)),
    }
}

pub fn high_pass(audio: &AudioBatch, cutoff_hz: f64) -> Result<AudioBatch> {
    let f = Biquad::butterworth(Pass::High, cutoff_hz, audio.sample_rate_hz() as f64)?;
    Ok(map_rows(audio, |x| f.process(x)))
}

pub fn low_pass(audio: &AudioBatch, cutoff_hz: f64) -> Result<AudioBatch> {
    let f = Biquad::butterworth(Pass::Low, cutoff_hz, audio.sample_rate_hz() as f64)?;
    Ok(map_rows(audio, |x| f.process(x)))
}

pub fn pitch_shift(audio: &AudioBatch, semitones: f64) -> Result<AudioBatch> {
    if !(semitones.abs() <= 12.0) {
        return Err(Error::invalid(format!("pitch shift {semitones} exceeds ±12 semitones")));
    }
    Ok(map_rows(audio, |x| {
        let y = pitch::shift(x, semitones);
        x.copy_from_slice(&y);
    }))
}

fn rotate(x: &mut [f32], fraction: f64) {
    let n = x.len();
    if n == 0 {
        return;
    }
    let s = (fraction * n as f64).round() as i64;
    x.rotate_right(s.rem_euclid(n as i64) as usize);
}

/// Circular shift: sample `i` moves to `(i + round(fraction × n)) mod n`.
pub fn time_shift(audio: &AudioBatch, fraction: f64) -> Result<AudioBatch> {
    if !(fraction.abs() <= 1.0) {
        return Err(Error::invalid(format!("time shift {fraction} exceeds ±1")));
    }
    Ok(map_rows(audio, |x| rotate(x, fraction)))
}

pub fn reverb(audio: &AudioBatch, impulse: &[f32]) -> Result<AudioBatch> {
    if impulse.is_empty() {
        return Err(Error::invalid("impulse response is empty"));
    }
    Ok(map_rows(audio, |x| reverb::apply(x, impulse).expect("non-empty")))
}

fn map_rows(audio: &AudioBatch, f: impl Fn(&mut [f32]) + Sync) -> AudioBatch {
    let mut m = audio.samples().clone();
    let n = m.cols().max(1);
    m.as_mut_slice().par_chunks_mut(n).for_each(&f);
    AudioBatch::from_parts(m, audio.sample_rate_hz())
}

/// A validated configuration with its impulse responses loaded and
/// resampled to the working rate.
#[derive(Debug, Clone)]
pub struct FxChain {
    config: FxConfig,
    sample_rate_hz: u32,
    irs: Vec<Vec<f32>>,
}

impl FxChain {
    pub fn new(config: FxConfig, sample_rate_hz: u32) -> Result<Self> {
        config.validate()?;
        if sample_rate_hz == 0 {
            return Err(Error::invalid("sample rate must be positive"));
        }
        let irs = if config.impulse_responses.is_empty() {
            default_irs(sample_rate_hz)
        } else {
            config
                .impulse_responses
                .iter()
                .map(|p| {
                    let (x, sr) = read_wav(p)?;
                    if x.is_empty() {
                        return Err(Error::Format {
                            path: p.clone(),
                            reason: "impulse response has no samples".into(),
                        });
                    }
                    resample_signal(&x, sr, sample_rate_hz)
                })
                .collect::<Result<_>>()?
        };
        Ok(Self {
            config,
            sample_rate_hz,
            irs,
        })
    }

    /// Adds every `.wav` file of a directory to the impulse-response set.
    pub fn with_ir_dir(mut config: FxConfig, dir: &std::path::Path, sample_rate_hz: u32) -> Result<Self> {
        let mut files: Vec<PathBuf> = std::fs::read_dir(dir)
            .map_err(|e| Error::io(dir, e))?
            .filter_map(|e| e.ok().map(|e| e.path()))
            .filter(|p| p.extension().is_some_and(|x| x.eq_ignore_ascii_case("wav")))
            .collect();
        files.sort();
        if files.is_empty() {
            return Err(Error::Format {
                path: dir.to_path_buf(),
                reason: "directory contains no .wav impulse responses".into(),
            });
        }
        config.impulse_responses.extend(files);
        Self::new(config, sample_rate_hz)
    }

    pub fn config(&self) -> &FxConfig {
        &self.config
    }

    pub fn impulse_responses(&self) -> &[Vec<f32>] {
        &self.irs
    }

    pub fn plan(&self, seed: u64, mini_batch: u64) -> MiniBatchPlan {
        plan_mini_batch(&self.config, self.irs.len(), seed, mini_batch)
    }

    fn apply_plan(&self, plan: &MiniBatchPlan, rows: &mut [f32], n: usize) -> Result<()> {
        let sr = self.sample_rate_hz as f64;
        // Keep the low-pass strictly below Nyquist at low working rates.
        let lp = plan.low_pass_hz.map(|f| f.min(0.45 * sr));
        let hp = plan.high_pass_hz.map(|f| f.min(0.45 * sr));
        let hp = hp.map(|f| Biquad::butterworth(Pass::High, f, sr)).transpose()?;
        let lp = lp.map(|f| Biquad::butterworth(Pass::Low, f, sr)).transpose()?;
        for x in rows.chunks_mut(n) {
            if let Some(f) = &hp {
                f.process(x);
            }
            if let Some(f) = &lp {
                f.process(x);
            }
            if let Some(s) = plan.pitch_semitones {
                let y = pitch::shift(x, s);
                x.copy_from_slice(&y);
            }
            if let Some(s) = plan.time_shift {
                rotate(x, s);
            }
            if let Some(i) = plan.reverb_ir {
                reverb::apply(x, &self.irs[i])?;
            }
            let p = peak(x);
            if p > 1.0 {
                x.iter_mut().for_each(|v| *v /= p);
            }
        }
        Ok(())
    }

    /// Mini-batch `b` covers rows `b × size .. (b + 1) × size`.
    pub fn apply(&self, audio: &AudioBatch, seed: u64) -> Result<AudioBatch> {
        if audio.sample_rate_hz() != self.sample_rate_hz {
            return Err(Error::invalid(format!(
                "chain prepared for {} Hz, audio is {} Hz",
                self.sample_rate_hz,
                audio.sample_rate_hz()
            )));
        }
        let n = audio.num_samples();
        let mut m: Matrix<f32> = audio.samples().clone();
        if n > 0 {
            m.as_mut_slice()
                .par_chunks_mut(n * self.config.mini_batch_size)
                .enumerate()
                .try_for_each(|(b, rows)| self.apply_plan(&self.plan(seed, b as u64), rows, n))?;
        }
        Ok(AudioBatch::from_parts(m, self.sample_rate_hz))
    }
}

/// Builds the chain for the audio's rate and applies it once.
pub fn apply_chain(audio: &AudioBatch, config: &FxConfig, seed: u64) -> Result<AudioBatch> {
    FxChain::new(config.clone(), audio.sample_rate_hz())?.apply(audio, seed)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dsp::dominant_frequency;

    fn tones(k: usize) -> AudioBatch {
        let rows = (0..k)
            .map(|r| {
                (0..8000)
                    .map(|i| (0.5 * (std::f64::consts::TAU * (200.0 + 50.0 * r as f64) * i as f64 / 16_000.0).sin()) as f32)
                    .collect()
            })
            .collect();
        AudioBatch::from_rows(rows, 16_000).unwrap()
    }

    #[test]
    fn zero_probability_is_identity() {
        let cfg = FxConfig {
            probabilities: EffectProbabilities::uniform(0.0),
            ..FxConfig::default()
        };
        let a = tones(5);
        assert_eq!(apply_chain(&a, &cfg, 1).unwrap(), a);
    }

    #[test]
    fn deterministic_and_shape_preserving() {
        let cfg = FxConfig {
            probabilities: EffectProbabilities::uniform(1.0),
            mini_batch_size: 2,
            ..FxConfig::default()
        };
        let a = tones(5);
        let x = apply_chain(&a, &cfg, 7).unwrap();
        assert_eq!(x, apply_chain(&a, &cfg, 7).unwrap());
        assert_ne!(x, apply_chain(&a, &cfg, 8).unwrap());
        assert_eq!(x.samples().shape(), a.samples().shape());
        assert!(x.samples().as_slice().iter().all(|v| v.is_finite() && v.abs() <= 1.0));
    }

    #[test]
    fn parameters_shared_within_mini_batch() {
        // Only time shift, so the shift amount is directly observable.
        let cfg = FxConfig {
            probabilities: EffectProbabilities {
                time_shift: 1.0,
                ..EffectProbabilities::uniform(0.0)
            },
            mini_batch_size: 2,
            ..FxConfig::default()
        };
        let mut rows = vec![vec![0.0f32; 1000]; 4];
        for r in &mut rows {
            r[0] = 1.0;
        }
        let a = AudioBatch::from_rows(rows, 16_000).unwrap();
        let out = apply_chain(&a, &cfg, 3).unwrap();
        let pos: Vec<usize> = (0..4).map(|r| out.row(r).iter().position(|&v| v == 1.0).unwrap()).collect();
        assert_eq!(pos[0], pos[1]);
        assert_eq!(pos[2], pos[3]);
        assert_ne!(pos[0], pos[2]);
    }

    #[test]
    fn application_rate_near_probability() {
        let cfg = FxConfig::default();
        let n = 10_000;
        for e in Effect::CHAIN {
            let hits = (0..n).filter(|&b| plan_mini_batch(&cfg, 3, 42, b).applies(e)).count();
            let rate = hits as f64 / n as f64;
            assert!((rate - 0.5).abs() < 0.02, "{e:?}: {rate}");
        }
    }

    #[test]
    fn time_shift_moves_and_inverts() {
        let x: Vec<f32> = (0..16_000).map(|i| i as f32).collect();
        let a = AudioBatch::from_rows(vec![x.clone()], 16_000).unwrap();
        let s = time_shift(&a, 0.25).unwrap();
        assert_eq!(s.row(0)[4000], 0.0);
        assert_eq!(time_shift(&s, -0.25).unwrap(), a);
        assert_eq!(time_shift(&a, 0.0).unwrap(), a);
        assert!(time_shift(&a, 1.5).is_err());
    }

    #[test]
    fn pitch_shift_op() {
        let tone: Vec<f32> = (0..16_000)
            .map(|i| (0.5 * (std::f64::consts::TAU * 440.0 * i as f64 / 16_000.0).sin()) as f32)
            .collect();
        let a = AudioBatch::from_rows(vec![tone], 16_000).unwrap();
        let up = pitch_shift(&a, 12.0).unwrap();
        assert!((dominant_frequency(up.row(0), 16_000.0) - 880.0).abs() < 880.0 * 0.02);
        assert!(pitch_shift(&a, 13.0).is_err());
    }

    #[test]
    fn silence_through_filters() {
        let a = AudioBatch::from_rows(vec![vec![0.0; 512]], 16_000).unwrap();
        assert_eq!(high_pass(&a, 800.0).unwrap(), a);
        assert_eq!(reverb(&a, &[1.0, 0.5]).unwrap(), a);
    }

    #[test]
    fn config_json_roundtrip_and_validation() {
        let cfg = FxConfig::default();
        let text = serde_json::to_string(&cfg).unwrap();
        assert_eq!(serde_json::from_str::<FxConfig>(&text).unwrap(), cfg);
        let partial: FxConfig = serde_json::from_str(r#"{"mini_batch_size": 10}"#).unwrap();
        assert_eq!(partial.mini_batch_size, 10);
        let bad = FxConfig {
            high_pass_cutoff_hz: [900.0, 100.0],
            ..FxConfig::default()
        };
        assert!(bad.validate().is_err());
        let bad = FxConfig {
            mini_batch_size: 0,
            ..FxConfig::default()
        };
        assert!(bad.validate().is_err());
    }

    #[test]
    fn ir_directory_loading() {
        let dir = tempfile::tempdir().unwrap();
        crate::wav::write_wav(&dir.path().join("a.wav"), &[1.0, 0.0, 0.5], 8_000, crate::wav::WavFormat::Float32)
            .unwrap();
        let chain = FxChain::with_ir_dir(FxConfig::default(), dir.path(), 16_000).unwrap();
        assert_eq!(chain.impulse_responses().len(), 1);
        assert_eq!(chain.impulse_responses()[0].len(), 6);
        let empty = tempfile::tempdir().unwrap();
        assert!(FxChain::with_ir_dir(FxConfig::default(), empty.path(), 16_000).is_err());
    }
}
