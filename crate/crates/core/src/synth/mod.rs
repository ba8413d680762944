//! Batch modular synthesis.
//!
//! Architectures are data ([`ArchitectureSpec`]); a [`Synth`] compiles one
//! into an evaluation plan and renders parameter matrices row by row.
//! Rows are independent, so batches are rendered in parallel.

mod arch;
mod envelope;
mod graph;
mod lfo;
mod modmix;
mod noise;
pub mod spec;
mod vco;

use std::sync::Arc;

pub use arch::{build_architecture, load_architecture};
pub use envelope::{adsr_envelope, AdsrParams};
pub use graph::{render, RenderConfig, RenderReport, Synth, CONTROL_DECIMATION};
pub use lfo::{lfo, LfoParams};
pub use modmix::modulation_mix;
pub use noise::noise_gen;
pub use spec::{ArchitectureName, ArchitectureSpec, Curve, ModuleKind, ModuleSpec, ParamSpec, Range};
pub use vco::{fm_vco, sine_vco, square_saw_vco, FmParams, Oscillation, VcoParams};

use crate::error::{Error, Result};
use crate::tensor::Matrix;

pub const DEFAULT_SAMPLE_RATE: u32 = 16_000;
pub const DEFAULT_DURATION_S: f64 = 1.0;

/// Batch of normalized parameter vectors, one row per sound.
#[derive(Debug, Clone, PartialEq)]
pub struct ParamMatrix {
    values: Matrix<f64>,
    arch: Arc<ArchitectureSpec>,
}

impl ParamMatrix {
    pub fn new(arch: Arc<ArchitectureSpec>, values: Matrix<f64>) -> Result<Self> {
        if values.cols() != arch.num_params() {
            return Err(Error::shape(format!(
                "{} expects {} parameter columns, got {}",
                arch.name,
                arch.num_params(),
                values.cols()
            )));
        }
        if let Some(v) = values.as_slice().iter().find(|v| !(0.0..=1.0).contains(*v)) {
            return Err(Error::invalid(format!(
                "normalized parameters must lie in [0, 1], found {v}"
            )));
        }
        Ok(Self { values, arch })
    }

    /// Builds from values already known to be in range.
    pub(crate) fn new_unchecked(arch: Arc<ArchitectureSpec>, values: Matrix<f64>) -> Self {
        debug_assert_eq!(values.cols(), arch.num_params());
        Self { values, arch }
    }

    pub fn values(&self) -> &Matrix<f64> {
        &self.values
    }

    pub fn arch(&self) -> &Arc<ArchitectureSpec> {
        &self.arch
    }

    pub fn rows(&self) -> usize {
        self.values.rows()
    }

    pub fn row(&self, i: usize) -> &[f64] {
        self.values.row(i)
    }

    /// Rows `[start, end)` as a new matrix.
    pub fn slice_rows(&self, start: usize, end: usize) -> ParamMatrix {
        let cols = self.values.cols();
        let data = self.values.as_slice()[start * cols..end * cols].to_vec();
        ParamMatrix::new_unchecked(
            self.arch.clone(),
            Matrix::from_vec(end - start, cols, data).expect("row slice"),
        )
    }
}

/// `k` mono waveforms sharing a sample rate and length.
#[derive(Debug, Clone, PartialEq)]
pub struct AudioBatch {
    samples: Matrix<f32>,
    sample_rate_hz: u32,
}

impl AudioBatch {
    pub fn new(samples: Matrix<f32>, sample_rate_hz: u32) -> Result<Self> {
        if sample_rate_hz == 0 {
            return Err(Error::invalid("sample rate must be positive"));
        }
        if samples.as_slice().iter().any(|v| !v.is_finite()) {
            return Err(Error::Numerical("audio contains non-finite samples".into()));
        }
        Ok(Self {
            samples,
            sample_rate_hz,
        })
    }

    pub fn from_rows(rows: Vec<Vec<f32>>, sample_rate_hz: u32) -> Result<Self> {
        Self::new(Matrix::from_rows(rows)?, sample_rate_hz)
    }

    pub(crate) fn from_parts(samples: Matrix<f32>, sample_rate_hz: u32) -> Self {
        Self {
            samples,
            sample_rate_hz,
        }
    }

    pub fn len(&self) -> usize {
        self.samples.rows()
    }

    pub fn is_empty(&self) -> bool {
        self.samples.rows() == 0
    }

    pub fn num_samples(&self) -> usize {
        self.samples.cols()
    }

    pub fn sample_rate_hz(&self) -> u32 {
        self.sample_rate_hz
    }

    pub fn duration_s(&self) -> f64 {
        self.samples.cols() as f64 / self.sample_rate_hz as f64
    }

    pub fn row(&self, i: usize) -> &[f32] {
        self.samples.row(i)
    }

    pub fn samples(&self) -> &Matrix<f32> {
        &self.samples
    }

    pub fn into_samples(self) -> Matrix<f32> {
        self.samples
    }
}

/// Number of samples for a duration, `round(rate * duration)`.
pub fn num_samples(sample_rate_hz: u32, duration_s: f64) -> usize {
    (sample_rate_hz as f64 * duration_s).round() as usize
}

/// A single control signal at some control rate.
#[derive(Debug, Clone, PartialEq)]
pub struct ControlSignal {
    pub values: Vec<f32>,
    pub rate_hz: f64,
}

impl ControlSignal {
    pub fn constant(value: f32, n: usize, rate_hz: f64) -> Self {
        Self {
            values: vec![value; n],
            rate_hz,
        }
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }
}

#[inline]
pub(crate) fn midi_to_hz(midi: f64) -> f64 {
    440.0 * ((midi - 69.0) / 12.0).exp2()
}
