use std::f64::consts::TAU;

use super::ControlSignal;
use crate::error::{Error, Result};

/// Low-frequency oscillator settings.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LfoParams {
    pub freq_hz: f64,
    pub mod_depth: f64,
    /// Radians.
    pub initial_phase: f64,
    /// Mixture weights for sine, triangle, saw, reverse saw, square.
    pub shape_weights: [f64; 5],
}

impl LfoParams {
    fn validate(&self, rate_hz: f64) -> Result<()> {
        if !(self.freq_hz > 0.0 && self.freq_hz < rate_hz / 2.0) {
            return Err(Error::invalid(format!(
                "LFO frequency {} Hz outside (0, {}) Hz",
                self.freq_hz,
                rate_hz / 2.0
            )));
        }
        if !(0.0..=1.0).contains(&self.mod_depth) {
            return Err(Error::invalid(format!("LFO depth {} outside [0, 1]", self.mod_depth)));
        }
        if self.shape_weights.iter().any(|w| !(*w >= 0.0 && w.is_finite())) {
            return Err(Error::invalid("LFO shape weights must be finite and non-negative"));
        }
        if !self.initial_phase.is_finite() {
            return Err(Error::invalid("LFO phase must be finite"));
        }
        Ok(())
    }

    /// Weights scaled to sum to one; all-zero weights select a pure sine.
    fn normalized_weights(&self) -> [f64; 5] {
        let total: f64 = self.shape_weights.iter().sum();
        if total <= 0.0 {
            [1.0, 0.0, 0.0, 0.0, 0.0]
        } else {
            self.shape_weights.map(|w| w / total)
        }
    }
}

/// Waveform value for a cycle position `p` in [0, 1).
#[inline]
fn mix_at(p: f64, w: &[f64; 5]) -> f64 {
    let sine = (TAU * p).sin();
    let tri = if p < 0.25 {
        4.0 * p
    } else if p < 0.75 {
        2.0 - 4.0 * p
    } else {
        4.0 * p - 4.0
    };
    let saw = if p < 0.5 { 2.0 * p } else { 2.0 * p - 2.0 };
    let sqr = if p < 0.5 { 1.0 } else { -1.0 };
    w[0] * sine + w[1] * tri + w[2] * saw - w[3] * saw + w[4] * sqr
}

/// Convex mixture of five LFO shapes scaled by the modulation depth.
pub fn lfo(params: &LfoParams, n_samples: usize, rate_hz: f64) -> Result<ControlSignal> {
    params.validate(rate_hz)?;
    let mut values = vec![0.0; n_samples];
    fill_lfo(params, None, None, rate_hz, &mut values);
    Ok(ControlSignal { values, rate_hz })
}

/// `rate_mod` (unipolar) raises the frequency by up to one octave;
/// `amp` (unipolar) scales the output.
pub(crate) fn fill_lfo(
    params: &LfoParams,
    rate_mod: Option<&[f32]>,
    amp: Option<&[f32]>,
    rate_hz: f64,
    out: &mut [f32],
) {
    let w = params.normalized_weights();
    let start = (params.initial_phase / TAU).rem_euclid(1.0);
    let step = params.freq_hz / rate_hz;
    let mut acc = 0.0f64;
    for (i, v) in out.iter_mut().enumerate() {
        let p = match rate_mod {
            // Closed form keeps long constant-rate signals free of drift.
            None => (start + step * i as f64).rem_euclid(1.0),
            Some(m) => {
                let p = (start + acc).rem_euclid(1.0);
                acc += step * f64::from(m[i]).exp2();
                p
            }
        };
        let mut x = params.mod_depth * mix_at(p, &w);
        if let Some(a) = amp {
            x *= f64::from(a[i]);
        }
        *v = x.clamp(-1.0, 1.0) as f32;
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn params(freq: f64, depth: f64, phase: f64, w: [f64; 5]) -> LfoParams {
        LfoParams {
            freq_hz: freq,
            mod_depth: depth,
            initial_phase: phase,
            shape_weights: w,
        }
    }

    #[test]
    fn sine_shape() {
        let rate = 1000.0;
        let s = lfo(&params(1.0, 1.0, 0.0, [1.0, 0.0, 0.0, 0.0, 0.0]), 1000, rate).unwrap();
        assert!(s.values[0].abs() < 1e-7);
        assert!((s.values[250] - 1.0).abs() < 1e-6);
    }

    #[test]
    fn zero_depth_is_silent() {
        let s = lfo(&params(3.0, 0.0, 0.4, [0.2, 0.3, 0.1, 0.0, 0.4]), 500, 1000.0).unwrap();
        assert!(s.values.iter().all(|&v| v == 0.0));
    }

    #[test]
    fn zero_weights_fall_back_to_sine() {
        let a = lfo(&params(2.0, 1.0, 0.0, [0.0; 5]), 500, 1000.0).unwrap();
        let b = lfo(&params(2.0, 1.0, 0.0, [1.0, 0.0, 0.0, 0.0, 0.0]), 500, 1000.0).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn square_crossings() {
        // A small phase offset keeps the edges off the sample grid.
        let rate = 16_000.0;
        let s = lfo(&params(2.0, 1.0, 0.1, [0.0, 0.0, 0.0, 0.0, 1.0]), 16_000, rate).unwrap();
        let crossings = s
            .values
            .windows(2)
            .filter(|w| (w[0] >= 0.0) != (w[1] >= 0.0))
            .count();
        assert_eq!(crossings, 4);
    }

    #[test]
    fn mixture_is_bounded() {
        let s = lfo(&params(5.0, 1.0, 1.0, [0.3, 0.9, 0.2, 0.7, 0.5]), 2000, 1000.0).unwrap();
        assert!(s.values.iter().all(|v| (-1.0..=1.0).contains(v)));
    }

    #[test]
    fn rejects_bad_ranges() {
        assert!(lfo(&params(0.0, 1.0, 0.0, [1.0; 5]), 10, 1000.0).is_err());
        assert!(lfo(&params(600.0, 1.0, 0.0, [1.0; 5]), 10, 1000.0).is_err());
        assert!(lfo(&params(1.0, 1.0, 0.0, [-1.0, 0.0, 0.0, 0.0, 0.0]), 10, 1000.0).is_err());
    }
}
