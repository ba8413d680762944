//! Small spectral helpers shared by the frontend, effects and metrics.

use rustfft::num_complex::Complex;
use rustfft::FftPlanner;

/// Magnitudes of the one-sided DFT of `x` (length `n / 2 + 1`).
pub fn magnitude_spectrum(x: &[f32]) -> Vec<f64> {
    if x.is_empty() {
        return Vec::new();
    }
    let mut buf: Vec<Complex<f64>> = x.iter().map(|&v| Complex::new(v as f64, 0.0)).collect();
    FftPlanner::new().plan_fft_forward(buf.len()).process(&mut buf);
    buf.truncate(x.len() / 2 + 1);
    buf.iter().map(|c| c.norm()).collect()
}

/// Frequency (Hz) of the strongest non-DC bin, refined by parabolic
/// interpolation on log magnitudes.
pub fn dominant_frequency(x: &[f32], sample_rate_hz: f64) -> f64 {
    let mag = magnitude_spectrum(x);
    if mag.len() < 3 {
        return 0.0;
    }
    let (k, _) = mag
        .iter()
        .enumerate()
        .skip(1)
        .fold((1, f64::MIN), |best, (i, &m)| if m > best.1 { (i, m) } else { best });
    let mut offset = 0.0;
    if k + 1 < mag.len() {
        let (a, b, c) = (
            mag[k - 1].max(1e-300).ln(),
            mag[k].max(1e-300).ln(),
            mag[k + 1].max(1e-300).ln(),
        );
        let denom = a - 2.0 * b + c;
        if denom.abs() > 1e-12 {
            offset = (0.5 * (a - c) / denom).clamp(-0.5, 0.5);
        }
    }
    (k as f64 + offset) * sample_rate_hz / x.len() as f64
}

pub fn rms(x: &[f32]) -> f64 {
    if x.is_empty() {
        return 0.0;
    }
    (x.iter().map(|&v| (v as f64) * (v as f64)).sum::<f64>() / x.len() as f64).sqrt()
}

pub fn peak(x: &[f32]) -> f32 {
    x.iter().fold(0.0f32, |m, v| m.max(v.abs()))
}

/// Periodic Hann window.
pub fn hann(n: usize) -> Vec<f64> {
    (0..n)
        .map(|i| 0.5 - 0.5 * (std::f64::consts::TAU * i as f64 / n as f64).cos())
        .collect()
}

/// Linear convolution of `x` with `h`, truncated to `x.len()` samples.
pub fn convolve_truncated(x: &[f32], h: &[f32]) -> Vec<f32> {
    if x.is_empty() || h.is_empty() {
        return vec![0.0; x.len()];
    }
    let n = (x.len() + h.len() - 1).next_power_of_two();
    let mut planner = FftPlanner::<f64>::new();
    let fwd = planner.plan_fft_forward(n);
    let inv = planner.plan_fft_inverse(n);
    let pad = |s: &[f32]| {
        let mut v: Vec<Complex<f64>> = s.iter().map(|&v| Complex::new(v as f64, 0.0)).collect();
        v.resize(n, Complex::new(0.0, 0.0));
        v
    };
    let mut a = pad(x);
    let mut b = pad(h);
    fwd.process(&mut a);
    fwd.process(&mut b);
    for (u, v) in a.iter_mut().zip(&b) {
        *u *= v;
    }
    inv.process(&mut a);
    a[..x.len()].iter().map(|c| (c.re / n as f64) as f32).collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn spectrum_of_cosine() {
        let n = 64;
        let x: Vec<f32> = (0..n)
            .map(|i| (std::f64::consts::TAU * 4.0 * i as f64 / n as f64).cos() as f32)
            .collect();
        let m = magnitude_spectrum(&x);
        assert_eq!(m.len(), 33);
        assert!((m[4] - 32.0).abs() < 1e-4);
        assert!(m[5] < 1e-4);
    }

    #[test]
    fn dominant_frequency_interpolates() {
        let sr = 8000.0;
        let x: Vec<f32> = (0..4000)
            .map(|i| (std::f64::consts::TAU * 441.0 * i as f64 / sr).sin() as f32)
            .collect();
        assert!((dominant_frequency(&x, sr) - 441.0).abs() < 0.5);
    }

    #[test]
    fn convolution_matches_direct() {
        let x = [1.0f32, 2.0, -1.0, 0.5, 3.0];
        let h = [0.5f32, -0.25, 1.0];
        let got = convolve_truncated(&x, &h);
        for i in 0..x.len() {
            let want: f32 = (0..h.len()).filter(|&j| j <= i).map(|j| h[j] * x[i - j]).sum();
            assert!((got[i] - want).abs() < 1e-5);
        }
    }

    #[test]
    fn hann_is_periodic() {
        let w = hann(4);
        assert!((w[0]).abs() < 1e-12 && (w[2] - 1.0).abs() < 1e-12);
    }

    #[test]
    fn levels() {
        assert_eq!(peak(&[0.5, -0.75]), 0.75);
        assert!((rms(&[1.0, -1.0]) - 1.0).abs() < 1e-12);
    }
}
