use std::f64::consts::PI;
use std::sync::OnceLock;

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::synth::AudioBatch;
use crate::tensor::Matrix;

/// Zero crossings of the sinc kernel on each side, at the lower rate.
const HALF_WIDTH: f64 = 24.0;
/// Passband edge relative to the lower Nyquist frequency.
const ROLLOFF: f64 = 0.94;

/// Kernel table entries per unit of `t`.
const TABLE_RES: usize = 2048;

fn kernel_exact(t: f64) -> f64 {
    if t.abs() >= HALF_WIDTH {
        return 0.0;
    }
    let sinc = if t == 0.0 { 1.0 } else { (PI * t).sin() / (PI * t) };
    // Blackman window over [-HALF_WIDTH, HALF_WIDTH].
    let u = (t / HALF_WIDTH + 1.0) * 0.5;
    let w = 0.42 - 0.5 * (2.0 * PI * u).cos() + 0.08 * (4.0 * PI * u).cos();
    sinc * w
}

/// Half of the (even) kernel sampled at `1/TABLE_RES`, with one trailing
/// zero so interpolation never reads past the end.
fn table() -> &'static [f64] {
    static TABLE: OnceLock<Vec<f64>> = OnceLock::new();
    TABLE.get_or_init(|| {
        let n = HALF_WIDTH as usize * TABLE_RES;
        (0..=n + 1).map(|i| kernel_exact(i as f64 / TABLE_RES as f64)).collect()
    })
}

#[inline]
fn kernel(table: &[f64], t: f64) -> f64 {
    let a = t.abs() * TABLE_RES as f64;
    let i = a as usize;
    if i + 1 >= table.len() {
        return 0.0;
    }
    let f = a - i as f64;
    table[i] + (table[i + 1] - table[i]) * f
}

/// Windowed-sinc interpolation of `x` onto `out_len` points where output
/// sample `j` sits at input position `j / ratio`.
fn interpolate(x: &[f32], ratio: f64, out_len: usize) -> Vec<f32> {
    let scale = ratio.min(1.0) * ROLLOFF;
    let half = HALF_WIDTH / scale;
    let table = table();
    (0..out_len)
        .map(|j| {
            let pos = j as f64 / ratio;
            let lo = (pos - half).ceil().max(0.0) as usize;
            let hi = ((pos + half).floor() as usize).min(x.len().saturating_sub(1));
            let mut acc = 0.0;
            for (i, &v) in x.iter().enumerate().take(hi + 1).skip(lo) {
                acc += v as f64 * kernel(table, (pos - i as f64) * scale);
            }
            (acc * scale) as f32
        })
        .collect()
}

/// Resamples one signal; the length scales by `to / from` (rounded).
pub fn resample_signal(x: &[f32], from_hz: u32, to_hz: u32) -> Result<Vec<f32>> {
    if from_hz == 0 || to_hz == 0 {
        return Err(Error::invalid("sample rates must be positive"));
    }
    if from_hz == to_hz {
        return Ok(x.to_vec());
    }
    let ratio = to_hz as f64 / from_hz as f64;
    let out_len = (x.len() as f64 * ratio).round() as usize;
    Ok(interpolate(x, ratio, out_len))
}

/// Band-limited change of length: `x` is resampled so that it spans
/// `out_len` samples. Used to shift pitch after a time stretch.
pub fn stretch_to_len(x: &[f32], out_len: usize) -> Vec<f32> {
    if x.len() == out_len || x.is_empty() {
        return x.to_vec();
    }
    interpolate(x, out_len as f64 / x.len() as f64, out_len)
}

pub fn resample(audio: &AudioBatch, target_hz: u32) -> Result<AudioBatch> {
    if target_hz == 0 {
        return Err(Error::invalid("target sample rate must be positive"));
    }
    let from = audio.sample_rate_hz();
    if from == target_hz {
        return Ok(audio.clone());
    }
    let rows: Vec<Vec<f32>> = (0..audio.len())
        .into_par_iter()
        .map(|r| resample_signal(audio.row(r), from, target_hz))
        .collect::<Result<_>>()?;
    let n = rows.first().map_or(0, Vec::len);
    let data = rows.into_iter().flatten().collect();
    Ok(AudioBatch::from_parts(Matrix::from_vec(audio.len(), n, data)?, target_hz))
}
