use std::sync::Arc;

use rayon::prelude::*;
use rustfft::num_complex::Complex;
use rustfft::{Fft, FftPlanner};

use super::{resample, FRONTEND_RATE_HZ};
use crate::dsp::hann;
use crate::error::{Error, Result};
use crate::synth::AudioBatch;
use crate::tensor::write_tensor;

pub const MEL_BANDS: usize = 64;
pub const MEL_FRAMES: usize = 96;
pub const LOG_OFFSET: f64 = 0.01;

const WINDOW: usize = 400;
const HOP: usize = 160;
const FFT_LEN: usize = 512;
const MEL_LOW_HZ: f64 = 125.0;
const MEL_HIGH_HZ: f64 = 7500.0;

fn hz_to_mel(hz: f64) -> f64 {
    1127.0 * (1.0 + hz / 700.0).ln()
}

fn mel_to_hz(mel: f64) -> f64 {
    700.0 * ((mel / 1127.0).exp() - 1.0)
}

fn band_edges_mel() -> Vec<f64> {
    let (lo, hi) = (hz_to_mel(MEL_LOW_HZ), hz_to_mel(MEL_HIGH_HZ));
    (0..MEL_BANDS + 2)
        .map(|i| lo + (hi - lo) * i as f64 / (MEL_BANDS + 1) as f64)
        .collect()
}

/// Center frequency of every mel band, in Hz.
pub fn mel_band_centers_hz() -> Vec<f64> {
    band_edges_mel()[1..=MEL_BANDS].iter().map(|&m| mel_to_hz(m)).collect()
}

/// Triangular band over FFT bins, stored as a contiguous run of weights.
#[derive(Debug, Clone)]
struct Band {
    first_bin: usize,
    weights: Vec<f32>,
}

/// Log-mel spectrograms, `k × 96 × 64` (time major within each row).
#[derive(Debug, Clone, PartialEq)]
pub struct MelSpec {
    values: Vec<f32>,
    k: usize,
}

impl MelSpec {
    pub fn len(&self) -> usize {
        self.k
    }

    pub fn is_empty(&self) -> bool {
        self.k == 0
    }

    pub fn shape(&self) -> [usize; 3] {
        [self.k, MEL_FRAMES, MEL_BANDS]
    }

    /// One spectrogram flattened frame by frame.
    pub fn row(&self, i: usize) -> &[f32] {
        let n = MEL_FRAMES * MEL_BANDS;
        &self.values[i * n..(i + 1) * n]
    }

    pub fn at(&self, row: usize, frame: usize, band: usize) -> f32 {
        self.row(row)[frame * MEL_BANDS + band]
    }

    pub fn as_slice(&self) -> &[f32] {
        &self.values
    }

    pub fn into_vec(self) -> Vec<f32> {
        self.values
    }

    /// Writes the raw float32 tensor with its JSON sidecar.
    pub fn write(&self, path: &std::path::Path) -> Result<()> {
        write_tensor(path, &self.shape(), self.values.iter().copied())
    }
}

/// Reusable STFT plan and filterbank.
pub struct MelFrontend {
    fft: Arc<dyn Fft<f32>>,
    window: Vec<f32>,
    bands: Vec<Band>,
}

impl std::fmt::Debug for MelFrontend {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("MelFrontend").field("bands", &self.bands.len()).finish()
    }
}

impl Default for MelFrontend {
    fn default() -> Self {
        Self::new()
    }
}

impl MelFrontend {
    pub fn new() -> Self {
        let edges = band_edges_mel();
        let n_bins = FFT_LEN / 2 + 1;
        let bin_mel: Vec<f64> = (0..n_bins)
            .map(|b| hz_to_mel(b as f64 * FRONTEND_RATE_HZ as f64 / FFT_LEN as f64))
            .collect();
        let bands = (0..MEL_BANDS)
            .map(|m| {
                let (lo, mid, hi) = (edges[m], edges[m + 1], edges[m + 2]);
                // DC never contributes.
                let w: Vec<f64> = bin_mel
                    .iter()
                    .enumerate()
                    .map(|(b, &x)| {
                        if b == 0 {
                            0.0
                        } else {
                            ((x - lo) / (mid - lo)).min((hi - x) / (hi - mid)).max(0.0)
                        }
                    })
                    .collect();
                let first = w.iter().position(|&v| v > 0.0).unwrap_or(0);
                let last = w.iter().rposition(|&v| v > 0.0).unwrap_or(0);
                Band {
                    first_bin: first,
                    weights: w[first..=last].iter().map(|&v| v as f32).collect(),
                }
            })
            .collect();
        Self {
            fft: FftPlanner::new().plan_fft_forward(FFT_LEN),
            window: hann(WINDOW).into_iter().map(|v| v as f32).collect(),
            bands,
        }
    }

    /// Log-mel of one 16 kHz signal into `out` (`96 × 64`).
    pub fn compute_into(&self, x: &[f32], out: &mut [f32]) {
        debug_assert_eq!(out.len(), MEL_FRAMES * MEL_BANDS);
        let floor = LOG_OFFSET.ln() as f32;
        out.fill(floor);
        let n_frames = if x.len() <= WINDOW {
            1
        } else {
            1 + (x.len() - WINDOW) / HOP
        };
        // Center-crop surplus frames; missing frames stay at the floor.
        let skip = n_frames.saturating_sub(MEL_FRAMES) / 2;
        let used = n_frames.min(MEL_FRAMES);
        let mut buf = vec![Complex::new(0.0f32, 0.0); FFT_LEN];
        let mut scratch = vec![Complex::new(0.0f32, 0.0); self.fft.get_inplace_scratch_len()];
        let mut mag = vec![0.0f32; FFT_LEN / 2 + 1];
        for t in 0..used {
            let start = (skip + t) * HOP;
            buf.fill(Complex::new(0.0, 0.0));
            for (i, (c, w)) in buf.iter_mut().zip(&self.window).enumerate() {
                c.re = x.get(start + i).copied().unwrap_or(0.0) * w;
            }
            self.fft.process_with_scratch(&mut buf, &mut scratch);
            for (m, c) in mag.iter_mut().zip(&buf) {
                *m = c.norm();
            }
            let row = &mut out[t * MEL_BANDS..(t + 1) * MEL_BANDS];
            for (o, band) in row.iter_mut().zip(&self.bands) {
                let e: f32 = band
                    .weights
                    .iter()
                    .zip(&mag[band.first_bin..])
                    .map(|(w, m)| w * m)
                    .sum();
                *o = (e as f64 + LOG_OFFSET).ln() as f32;
            }
        }
    }

    pub fn compute(&self, x: &[f32]) -> Vec<f32> {
        let mut out = vec![0.0; MEL_FRAMES * MEL_BANDS];
        self.compute_into(x, &mut out);
        out
    }

    /// Log-mel of every row; audio at other rates is resampled to 16 kHz first.
    pub fn batch(&self, audio: &AudioBatch) -> Result<MelSpec> {
        if audio.is_empty() || audio.num_samples() == 0 {
            return Err(Error::invalid("log-mel of empty audio"));
        }
        let resampled;
        let audio = if audio.sample_rate_hz() == FRONTEND_RATE_HZ {
            audio
        } else {
            resampled = resample(audio, FRONTEND_RATE_HZ)?;
            &resampled
        };
        let n = MEL_FRAMES * MEL_BANDS;
        let mut values = vec![0.0f32; audio.len() * n];
        values
            .par_chunks_mut(n)
            .enumerate()
            .for_each(|(r, out)| self.compute_into(audio.row(r), out));
        Ok(MelSpec {
            values,
            k: audio.len(),
        })
    }
}

pub fn log_mel(audio: &AudioBatch) -> Result<MelSpec> {
    MelFrontend::new().batch(audio)
}
