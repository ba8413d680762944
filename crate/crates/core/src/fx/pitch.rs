use std::f64::consts::{PI, TAU};

use rustfft::num_complex::Complex;
use rustfft::FftPlanner;

use crate::dsp::hann;
use crate::frontend::stretch_to_len;

const FRAME: usize = 1024;
const SYNTH_HOP: usize = 256;

fn wrap(phase: f64) -> f64 {
    phase - TAU * ((phase + PI) / TAU).floor()
}

/// Phase-vocoder time stretch of `x` by `factor` (output about
/// `factor × len` samples).
pub(crate) fn time_stretch(x: &[f32], factor: f64, out_len: usize) -> Vec<f32> {
    let half = FRAME / 2;
    let bins = FRAME / 2 + 1;
    let analysis_hop = SYNTH_HOP as f64 / factor;
    let window = hann(FRAME);
    let mut planner = FftPlanner::<f64>::new();
    let fwd = planner.plan_fft_forward(FRAME);
    let inv = planner.plan_fft_inverse(FRAME);

    let frames = out_len.div_ceil(SYNTH_HOP) + 1;
    let mut out = vec![0.0f64; frames * SYNTH_HOP + FRAME];
    let mut norm = vec![0.0f64; out.len()];
    let mut buf = vec![Complex::new(0.0, 0.0); FRAME];
    let mut prev_phase = vec![0.0f64; bins];
    let mut synth_phase = vec![0.0f64; bins];
    let mut prev_pos: Option<isize> = None;

    for t in 0..frames {
        // Frames are centered on their nominal position.
        let pos = (t as f64 * analysis_hop).round() as isize - half as isize;
        for (i, c) in buf.iter_mut().enumerate() {
            let j = pos + i as isize;
            let v = if j >= 0 { x.get(j as usize).copied().unwrap_or(0.0) } else { 0.0 };
            *c = Complex::new(v as f64 * window[i], 0.0);
        }
        fwd.process(&mut buf);
        let hop_a = prev_pos.map(|p| (pos - p) as f64);
        for k in 0..bins {
            let (mag, phase) = buf[k].to_polar();
            synth_phase[k] = match hop_a {
                None => phase,
                Some(ha) if ha > 0.0 => {
                    let omega = TAU * k as f64 / FRAME as f64;
                    let dev = wrap(phase - prev_phase[k] - omega * ha);
                    synth_phase[k] + (omega + dev / ha) * SYNTH_HOP as f64
                }
                Some(_) => synth_phase[k] + TAU * k as f64 / FRAME as f64 * SYNTH_HOP as f64,
            };
            prev_phase[k] = phase;
            buf[k] = Complex::from_polar(mag, synth_phase[k]);
        }
        for k in 1..FRAME - bins + 1 {
            buf[FRAME - k] = buf[k].conj();
        }
        inv.process(&mut buf);
        let at = t * SYNTH_HOP;
        for i in 0..FRAME {
            out[at + i] += buf[i].re / FRAME as f64 * window[i];
            norm[at + i] += window[i] * window[i];
        }
        prev_pos = Some(pos);
    }
    // Output index `half` corresponds to input time zero.
    (0..out_len)
        .map(|i| {
            let j = i + half;
            if norm[j] > 1e-9 {
                (out[j] / norm[j]) as f32
            } else {
                0.0
            }
        })
        .collect()
}

/// Shifts pitch by `semitones` while keeping the length: stretch in time
/// by the frequency ratio, then resample back to the original length.
pub(crate) fn shift(x: &[f32], semitones: f64) -> Vec<f32> {
    if semitones == 0.0 || x.is_empty() {
        return x.to_vec();
    }
    let ratio = (semitones / 12.0).exp2();
    let stretched_len = ((x.len() as f64) * ratio).round().max(1.0) as usize;
    let stretched = time_stretch(x, ratio, stretched_len);
    stretch_to_len(&stretched, x.len())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dsp::dominant_frequency;

    fn tone(hz: f64) -> Vec<f32> {
        (0..16_000)
            .map(|i| (0.5 * (TAU * hz * i as f64 / 16_000.0).sin()) as f32)
            .collect()
    }

    #[test]
    fn zero_is_identity() {
        let x = tone(440.0);
        assert_eq!(shift(&x, 0.0), x);
    }

    #[test]
    fn stretch_keeps_pitch() {
        let y = time_stretch(&tone(440.0), 1.5, 24_000);
        assert_eq!(y.len(), 24_000);
        assert!((dominant_frequency(&y, 16_000.0) - 440.0).abs() < 440.0 * 0.01);
    }

    #[test]
    fn shifts_match_ratio() {
        for s in [-2.0, -1.0, 1.0, 2.0, 12.0] {
            let y = shift(&tone(440.0), s);
            assert_eq!(y.len(), 16_000);
            let want = 440.0 * (s / 12.0f64).exp2();
            let got = dominant_frequency(&y, 16_000.0);
            assert!((got - want).abs() < 0.02 * want, "{s}: {got} vs {want}");
        }
    }
}
