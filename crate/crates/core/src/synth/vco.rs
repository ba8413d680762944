//! Phase-accumulating oscillators. Waveforms are naive (not band-limited);
//! frequencies above Nyquist are clamped and flagged.

use std::f64::consts::{PI, TAU};

use super::midi_to_hz;
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct VcoParams {
    /// Semitones added to the keyboard pitch.
    pub tuning: f64,
    /// Semitones of pitch excursion at full-scale modulation.
    pub mod_depth: f64,
    /// Radians.
    pub initial_phase: f64,
}

/// Two-operator phase modulation: a sine modulator driving a sine or
/// square-saw carrier.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FmParams {
    pub carrier: VcoParams,
    /// Modulator-to-carrier frequency ratio.
    pub ratio: f64,
    /// Modulator detune in semitones.
    pub detune: f64,
    pub mod_phase: f64,
    /// Peak phase deviation in radians.
    pub index: f64,
    /// Modulator self-feedback amount.
    pub feedback: f64,
    /// `Some(shape)` selects a square-saw carrier.
    pub shape: Option<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Oscillation {
    pub samples: Vec<f32>,
    /// Set when some instantaneous frequency had to be clamped to Nyquist.
    pub nyquist_clamped: bool,
}

#[derive(Debug, Clone, Copy)]
pub(crate) enum Wave {
    Sine,
    SquareSaw(f64),
}

impl Wave {
    /// Shape 0 is a square, shape 1 a saw-like wave with even harmonics.
    #[inline]
    pub(crate) fn at(self, phase: f64) -> f64 {
        match self {
            Wave::Sine => phase.sin(),
            Wave::SquareSaw(shape) => {
                let sq = if phase.rem_euclid(TAU) < PI { 1.0 } else { -1.0 };
                sq * (1.0 + shape * phase.cos()) / (1.0 + shape)
            }
        }
    }
}

#[inline]
fn clamp_hz(hz: f64, nyquist: f64, clamped: &mut bool) -> f64 {
    if hz > nyquist {
        *clamped = true;
        nyquist
    } else {
        hz
    }
}

/// Core oscillator loop. `midi_at(i)` gives the instantaneous MIDI pitch.
pub(crate) fn run_vco(
    wave: Wave,
    initial_phase: f64,
    n: usize,
    rate_hz: f64,
    midi_at: impl Fn(usize) -> f64,
    mut sink: impl FnMut(usize, f64),
) -> bool {
    let nyquist = rate_hz / 2.0;
    let mut clamped = false;
    let mut phase = initial_phase;
    for i in 0..n {
        sink(i, wave.at(phase));
        let hz = clamp_hz(midi_to_hz(midi_at(i)), nyquist, &mut clamped);
        phase = (phase + TAU * hz / rate_hz) % TAU;
    }
    clamped
}

pub(crate) struct FmDrive<I, S> {
    pub index_at: I,
    pub sweep_at: S,
}

pub(crate) fn run_fm<I, S>(
    p: &FmParams,
    n: usize,
    rate_hz: f64,
    midi_at: impl Fn(usize) -> f64,
    drive: FmDrive<I, S>,
    mut sink: impl FnMut(usize, f64),
) -> bool
where
    I: Fn(usize) -> f64,
    S: Fn(usize) -> f64,
{
    let wave = match p.shape {
        Some(s) => Wave::SquareSaw(s),
        None => Wave::Sine,
    };
    let nyquist = rate_hz / 2.0;
    let mut clamped = false;
    let mut carrier = p.carrier.initial_phase;
    let mut modulator = p.mod_phase;
    let mut last_mod = 0.0;
    for i in 0..n {
        let m = (modulator + p.feedback * last_mod).sin();
        last_mod = m;
        sink(i, wave.at(carrier + p.index * (drive.index_at)(i) * m));
        let hz = clamp_hz(midi_to_hz(midi_at(i)), nyquist, &mut clamped);
        let semis = p.detune + 12.0 * (drive.sweep_at)(i);
        let mod_hz = clamp_hz(hz * p.ratio * (semis / 12.0).exp2(), nyquist, &mut clamped);
        carrier = (carrier + TAU * hz / rate_hz) % TAU;
        modulator = (modulator + TAU * mod_hz / rate_hz) % TAU;
    }
    clamped
}

fn check_inputs(midi_f0: &[f32], modulation: Option<&[f32]>, rate_hz: f64) -> Result<()> {
    if !(rate_hz > 0.0) {
        return Err(Error::invalid("sample rate must be positive"));
    }
    if let Some(m) = modulation {
        if m.len() != midi_f0.len() {
            return Err(Error::shape(format!(
                "modulation has {} samples, pitch has {}",
                m.len(),
                midi_f0.len()
            )));
        }
    }
    Ok(())
}

fn pitch_fn<'a>(midi_f0: &'a [f32], modulation: Option<&'a [f32]>, p: &VcoParams) -> impl Fn(usize) -> f64 + 'a {
    let (tuning, depth) = (p.tuning, p.mod_depth);
    move |i| {
        let m = modulation.map_or(0.0, |m| f64::from(m[i]));
        f64::from(midi_f0[i]) + tuning + depth * m
    }
}

fn collect(n: usize, run: impl FnOnce(&mut dyn FnMut(usize, f64)) -> bool) -> Oscillation {
    let mut samples = vec![0.0f32; n];
    let nyquist_clamped = run(&mut |i, v| samples[i] = v as f32);
    Oscillation {
        samples,
        nyquist_clamped,
    }
}

/// Sine oscillator. Pitch in MIDI space is `f0 + tuning + mod_depth * mod`.
pub fn sine_vco(
    midi_f0: &[f32],
    modulation: Option<&[f32]>,
    p: &VcoParams,
    rate_hz: f64,
) -> Result<Oscillation> {
    check_inputs(midi_f0, modulation, rate_hz)?;
    let pitch = pitch_fn(midi_f0, modulation, p);
    Ok(collect(midi_f0.len(), |sink| {
        run_vco(Wave::Sine, p.initial_phase, midi_f0.len(), rate_hz, pitch, sink)
    }))
}

/// Square-saw oscillator; `shape` morphs from square (0) to saw (1).
pub fn square_saw_vco(
    midi_f0: &[f32],
    modulation: Option<&[f32]>,
    p: &VcoParams,
    shape: f64,
    rate_hz: f64,
) -> Result<Oscillation> {
    check_inputs(midi_f0, modulation, rate_hz)?;
    if !(0.0..=1.0).contains(&shape) {
        return Err(Error::invalid(format!("shape {shape} outside [0, 1]")));
    }
    let pitch = pitch_fn(midi_f0, modulation, p);
    Ok(collect(midi_f0.len(), |sink| {
        run_vco(Wave::SquareSaw(shape), p.initial_phase, midi_f0.len(), rate_hz, pitch, sink)
    }))
}

/// FM operator with a constant modulation index.
pub fn fm_vco(
    midi_f0: &[f32],
    modulation: Option<&[f32]>,
    p: &FmParams,
    rate_hz: f64,
) -> Result<Oscillation> {
    check_inputs(midi_f0, modulation, rate_hz)?;
    if !(p.ratio > 0.0) {
        return Err(Error::invalid("FM ratio must be positive"));
    }
    let pitch = pitch_fn(midi_f0, modulation, &p.carrier);
    let drive = FmDrive {
        index_at: |_| 1.0,
        sweep_at: |_| 0.0,
    };
    Ok(collect(midi_f0.len(), |sink| {
        run_fm(p, midi_f0.len(), rate_hz, pitch, drive, sink)
    }))
}
