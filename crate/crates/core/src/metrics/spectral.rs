use rustfft::num_complex::Complex;
use rustfft::FftPlanner;

use crate::dsp::hann;
use crate::error::{Error, Result};

/// Floor applied to magnitudes before the geometric mean.
const AMIN: f64 = 1e-10;
pub const FRAME: usize = 512;
pub const HOP: usize = 256;

/// Hann-windowed magnitude frames; a signal shorter than one frame is
/// zero-padded to a single frame.
pub fn stft_magnitudes(x: &[f32], frame: usize, hop: usize) -> Result<Vec<Vec<f64>>> {
    if x.is_empty() || frame == 0 || hop == 0 {
        return Err(Error::invalid("STFT needs a non-empty signal, frame and hop"));
    }
    let window = hann(frame);
    let fft = FftPlanner::new().plan_fft_forward(frame);
    let n_frames = if x.len() <= frame { 1 } else { 1 + (x.len() - frame) / hop };
    let mut buf = vec![Complex::new(0.0, 0.0); frame];
    Ok((0..n_frames)
        .map(|t| {
            for (i, c) in buf.iter_mut().enumerate() {
                *c = Complex::new(x.get(t * hop + i).copied().unwrap_or(0.0) as f64 * window[i], 0.0);
            }
            fft.process(&mut buf);
            buf[..frame / 2 + 1].iter().map(|c| c.norm()).collect()
        })
        .collect())
}

/// Mean over consecutive frame pairs of the L2 norm of the rectified
/// increase between L2-normalized frames.
pub fn spectral_flux(frames: &[Vec<f64>]) -> Result<f64> {
    if frames.len() < 2 {
        return Err(Error::invalid("spectral flux needs at least two frames"));
    }
    let unit = |f: &[f64]| {
        let n = f.iter().map(|v| v * v).sum::<f64>().sqrt();
        f.iter().map(|v| if n > 0.0 { v / n } else { 0.0 }).collect::<Vec<_>>()
    };
    let normalized: Vec<Vec<f64>> = frames.iter().map(|f| unit(f)).collect();
    let total: f64 = normalized
        .windows(2)
        .map(|w| {
            w[0].iter()
                .zip(&w[1])
                .map(|(a, b)| (b - a).max(0.0).powi(2))
                .sum::<f64>()
                .sqrt()
        })
        .sum();
    Ok(total / (frames.len() - 1) as f64)
}

/// Geometric over arithmetic mean of one magnitude spectrum.
pub fn spectral_flatness(spectrum: &[f64]) -> Result<f64> {
    if spectrum.is_empty() || spectrum.iter().any(|v| !(*v >= 0.0)) {
        return Err(Error::invalid("flatness needs a non-empty, non-negative spectrum"));
    }
    let n = spectrum.len() as f64;
    let log_mean = spectrum.iter().map(|v| v.max(AMIN).ln()).sum::<f64>() / n;
    let mean = spectrum.iter().map(|v| v.max(AMIN)).sum::<f64>() / n;
    Ok((log_mean.exp() / mean).clamp(0.0, 1.0))
}

/// Spectral flux of a clip with 512-sample frames and a 256 hop.
pub fn clip_flux(x: &[f32]) -> Result<f64> {
    spectral_flux(&stft_magnitudes(x, FRAME, HOP)?)
}

/// Mean per-frame flatness of a clip.
pub fn clip_flatness(x: &[f32]) -> Result<f64> {
    let frames = stft_magnitudes(x, FRAME, HOP)?;
    let mut total = 0.0;
    for f in &frames {
        total += spectral_flatness(f)?;
    }
    Ok(total / frames.len() as f64)
}
