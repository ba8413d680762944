use crate::dsp::{convolve_truncated, peak};
use crate::error::{Error, Result};
use crate::rng::CounterRng;

/// Decay times (to -60 dB) of the built-in impulse responses.
pub const DEFAULT_IR_DECAYS_S: [f64; 3] = [0.15, 0.35, 0.7];

/// Exponentially decaying noise tail behind a unit direct path.
pub fn synthetic_ir(decay_s: f64, sample_rate_hz: u32, seed: u64) -> Vec<f32> {
    let n = ((decay_s * sample_rate_hz as f64).ceil() as usize).max(1);
    let rng = CounterRng::from_key(seed);
    let rate = 6.9078 / (decay_s * sample_rate_hz as f64); // ln(1000)
    let mut ir: Vec<f32> = (0..n)
        .map(|i| ((2.0 * rng.uniform_at(0, i as u64) - 1.0) * 0.5 * (-rate * i as f64).exp()) as f32)
        .collect();
    ir[0] = 1.0;
    ir
}

pub fn default_irs(sample_rate_hz: u32) -> Vec<Vec<f32>> {
    DEFAULT_IR_DECAYS_S
        .iter()
        .enumerate()
        .map(|(i, &d)| synthetic_ir(d, sample_rate_hz, 0x1F00 + i as u64))
        .collect()
}

/// Convolution truncated to the input length, rescaled to the input peak.
pub(crate) fn apply(x: &mut [f32], ir: &[f32]) -> Result<()> {
    if ir.is_empty() {
        return Err(Error::invalid("impulse response is empty"));
    }
    let target = peak(x);
    let ir = &ir[..ir.len().min(x.len())];
    let mut y = convolve_truncated(x, ir);
    let got = peak(&y);
    if got > 0.0 {
        let g = target / got;
        y.iter_mut().for_each(|v| *v *= g);
    }
    x.copy_from_slice(&y);
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn unit_impulse_is_identity() {
        let mut x: Vec<f32> = (0..500).map(|i| ((i as f32) * 0.3).sin()).collect();
        let orig = x.clone();
        apply(&mut x, &[1.0]).unwrap();
        assert!(x.iter().zip(&orig).all(|(a, b)| (a - b).abs() < 1e-5));
    }

    #[test]
    fn silence_stays_silent() {
        let mut x = vec![0.0f32; 256];
        apply(&mut x, &default_irs(16_000)[0]).unwrap();
        assert!(x.iter().all(|&v| v == 0.0));
    }

    #[test]
    fn two_taps_make_two_clicks() {
        let mut x = vec![0.0f32; 400];
        x[10] = 1.0;
        let mut ir = vec![0.0f32; 101];
        ir[0] = 1.0;
        ir[100] = 1.0;
        apply(&mut x, &ir).unwrap();
        let clicks: Vec<usize> = (0..x.len()).filter(|&i| x[i].abs() > 0.5).collect();
        assert_eq!(clicks, vec![10, 110]);
    }

    #[test]
    fn empty_ir_rejected() {
        assert!(apply(&mut [1.0], &[]).is_err());
    }

    #[test]
    fn default_irs_decay() {
        for ir in default_irs(16_000) {
            assert_eq!(ir[0], 1.0);
            let tail = &ir[ir.len() * 9 / 10..];
            assert!(tail.iter().all(|v| v.abs() < 0.01));
        }
    }
}
