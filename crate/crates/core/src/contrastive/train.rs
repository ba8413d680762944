use std::path::Path;

use serde::{Deserialize, Serialize};

use super::embedding::{l2_normalize_backward, l2_normalize_rows_or_zero};
use super::{lr_at, total_with_grad, Encoder, EncoderSpec, EmbeddingMatrix, LossValue, TrainConfig};
use crate::error::{Error, Result};
use crate::frontend::{MelFrontend, MEL_BANDS, MEL_FRAMES};
use crate::fx::{FxChain, FxConfig};
use crate::rng::BatchKey;
use crate::sampler::DoppelgangerSampler;
use crate::stream::fx_seed;
use crate::synth::{build_architecture, ArchitectureName, AudioBatch, DEFAULT_DURATION_S, DEFAULT_SAMPLE_RATE};
use crate::tensor::Matrix;

/// Epoch index reserved for the fixed validation batches.
const VAL_EPOCH: u64 = u64::MAX;

/// Desk-scale training run of the contrastive procedure.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ToyConfig {
    pub arch: ArchitectureName,
    pub delta: f64,
    pub seed: u64,
    pub sample_rate_hz: u32,
    pub duration_s: f64,
    pub embedding_dim: usize,
    pub encoder: EncoderSpec,
    pub fx: Option<FxConfig>,
    pub train: TrainConfig,
}

impl Default for ToyConfig {
    fn default() -> Self {
        Self {
            arch: ArchitectureName::Voice,
            delta: 0.25,
            seed: 0,
            sample_rate_hz: DEFAULT_SAMPLE_RATE,
            duration_s: DEFAULT_DURATION_S,
            embedding_dim: 32,
            encoder: EncoderSpec::Linear,
            fx: None,
            train: TrainConfig {
                epochs: 10,
                sounds_per_epoch: 2000,
                batch_size: 64,
                replicas: 1,
                ..TrainConfig::default()
            },
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Split {
    Train,
    Val,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TraceRow {
    pub epoch: u64,
    pub split: Split,
    pub align: f64,
    pub unif: f64,
    pub total: f64,
    pub lr: f64,
}

#[derive(Debug)]
pub struct TrainOutcome {
    pub encoder: Box<dyn Encoder>,
    pub trace: Vec<TraceRow>,
}

impl TrainOutcome {
    pub fn final_val(&self) -> Option<&TraceRow> {
        self.trace.iter().rev().find(|r| r.split == Split::Val)
    }
}

/// Flattened log-mel rows, each centred and scaled to unit length so the
/// SGD step size does not depend on loudness. Constant rows (silence) map
/// to zero.
pub fn mel_features(frontend: &MelFrontend, audio: &AudioBatch) -> Result<Matrix<f64>> {
    let mel = frontend.batch(audio)?;
    let dim = MEL_FRAMES * MEL_BANDS;
    let mut data: Vec<f64> = mel.as_slice().iter().map(|&v| v as f64).collect();
    for row in data.chunks_mut(dim) {
        let mean = row.iter().sum::<f64>() / dim as f64;
        row.iter_mut().for_each(|v| *v -= mean);
        let norm = row.iter().map(|v| v * v).sum::<f64>().sqrt();
        let scale = if norm > 1e-9 { 1.0 / norm } else { 0.0 };
        row.iter_mut().for_each(|v| *v *= scale);
    }
    Matrix::from_vec(mel.len(), dim, data)
}

struct Pipeline {
    sampler: DoppelgangerSampler,
    fx: Option<FxChain>,
    frontend: MelFrontend,
}

impl Pipeline {
    fn features(&self, k: usize, key: BatchKey) -> Result<(Matrix<f64>, Matrix<f64>)> {
        let (mut a, mut b, _) = self.sampler.batch(k, key)?;
        if let Some(fx) = &self.fx {
            a = fx.apply(&a, fx_seed(key, 0))?;
            b = fx.apply(&b, fx_seed(key, 1))?;
        }
        Ok((mel_features(&self.frontend, &a)?, mel_features(&self.frontend, &b)?))
    }
}

/// Loss of one pair of feature batches, and optionally the parameter
/// gradient.
fn step(enc: &dyn Encoder, xa: &Matrix<f64>, xb: &Matrix<f64>, cfg: &TrainConfig, grad: bool) -> Result<(LossValue, Option<Vec<f64>>)> {
    let (za, acts_a) = enc.forward(xa)?;
    let (zb, acts_b) = enc.forward(xb)?;
    let (ya, na) = l2_normalize_rows_or_zero(&za);
    let (yb, nb) = l2_normalize_rows_or_zero(&zb);
    let (value, ga, gb) = total_with_grad(&EmbeddingMatrix::new(ya.clone())?, &EmbeddingMatrix::new(yb.clone())?, &cfg.loss)?;
    if !grad {
        return Ok((value, None));
    }
    let mut g = enc.backward(xa, &acts_a, &l2_normalize_backward(&ya, &na, &ga));
    let gb = enc.backward(xb, &acts_b, &l2_normalize_backward(&yb, &nb, &gb));
    for (u, v) in g.iter_mut().zip(gb) {
        *u += v;
    }
    Ok((value, Some(g)))
}

/// Batch sizes covering `n` sounds; a trailing singleton is dropped since
/// uniformity needs two rows.
fn batch_sizes(n: usize, batch: usize) -> Vec<usize> {
    (0..n.div_ceil(batch))
        .map(|b| batch.min(n - b * batch))
        .filter(|&k| k >= 2)
        .collect()
}

fn mean(values: &[LossValue]) -> LossValue {
    let n = values.len().max(1) as f64;
    LossValue {
        align: values.iter().map(|v| v.align).sum::<f64>() / n,
        unif: values.iter().map(|v| v.unif).sum::<f64>() / n,
        total: values.iter().map(|v| v.total).sum::<f64>() / n,
    }
}

fn check_finite(v: &LossValue, epoch: u64, batch: usize, split: &str) -> Result<()> {
    if v.total.is_finite() {
        Ok(())
    } else {
        Err(Error::Numerical(format!(
            "non-finite {split} loss at epoch {epoch}, batch {batch}: align {}, unif {}",
            v.align, v.unif
        )))
    }
}

/// Runs sample, perturb, render, log-mel, embed, loss and SGD for the
/// configured number of epochs. A pure function of the configuration.
pub fn train_toy(config: &ToyConfig) -> Result<TrainOutcome> {
    let tc = &config.train;
    tc.validate()?;
    if config.embedding_dim == 0 {
        return Err(Error::invalid("embedding dimension must be positive"));
    }
    let pipeline = Pipeline {
        sampler: DoppelgangerSampler::new(
            build_architecture(config.arch),
            config.delta,
            config.sample_rate_hz,
            config.duration_s,
        )?,
        fx: config
            .fx
            .clone()
            .map(|c| FxChain::new(c, config.sample_rate_hz))
            .transpose()?,
        frontend: MelFrontend::new(),
    };
    let n_val = (tc.sounds_per_epoch as f64 * tc.val_fraction).round() as usize;
    let n_train = tc.sounds_per_epoch - n_val;
    let batch = tc.batch_size * tc.replicas;
    let train_sizes = batch_sizes(n_train, batch);
    if train_sizes.is_empty() {
        return Err(Error::invalid("training split has fewer than two sounds"));
    }
    let val: Vec<(Matrix<f64>, Matrix<f64>)> = batch_sizes(n_val, batch)
        .into_iter()
        .enumerate()
        .map(|(b, k)| pipeline.features(k, BatchKey::at(config.seed, VAL_EPOCH, b as u64)))
        .collect::<Result<_>>()?;

    let mut enc = config
        .encoder
        .build(MEL_FRAMES * MEL_BANDS, config.embedding_dim, config.seed)?;
    let mut velocity = vec![0.0; enc.params().len()];
    let mut trace = Vec::with_capacity(2 * tc.epochs as usize);
    for epoch in 0..tc.epochs {
        let lr = lr_at(epoch, tc);
        let mut losses = Vec::with_capacity(train_sizes.len());
        for (b, &k) in train_sizes.iter().enumerate() {
            let (xa, xb) = pipeline.features(k, BatchKey::at(config.seed, epoch, b as u64))?;
            let (value, grad) = step(enc.as_ref(), &xa, &xb, tc, true)?;
            check_finite(&value, epoch, b, "training")?;
            let grad = grad.expect("requested");
            for ((w, v), g) in enc.params_mut().iter_mut().zip(&mut velocity).zip(grad) {
                *v = tc.momentum * *v + g + tc.weight_decay * *w;
                *w -= lr * *v;
            }
            losses.push(value);
        }
        let t = mean(&losses);
        trace.push(TraceRow {
            epoch,
            split: Split::Train,
            align: t.align,
            unif: t.unif,
            total: t.total,
            lr,
        });
        if !val.is_empty() {
            let vals = val
                .iter()
                .enumerate()
                .map(|(b, (xa, xb))| {
                    let (v, _) = step(enc.as_ref(), xa, xb, tc, false)?;
                    check_finite(&v, epoch, b, "validation")?;
                    Ok(v)
                })
                .collect::<Result<Vec<_>>>()?;
            let v = mean(&vals);
            trace.push(TraceRow {
                epoch,
                split: Split::Val,
                align: v.align,
                unif: v.unif,
                total: v.total,
                lr,
            });
        }
    }
    Ok(TrainOutcome { encoder: enc, trace })
}

/// Writes `epoch,split,align,unif,total,lr`.
pub fn write_trace_csv(path: &Path, trace: &[TraceRow]) -> Result<()> {
    let mut w = csv::Writer::from_path(path).map_err(|e| csv_err(path, e))?;
    for row in trace {
        w.serialize(row).map_err(|e| csv_err(path, e))?;
    }
    w.flush().map_err(|e| Error::io(path, e))
}

fn csv_err(path: &Path, e: csv::Error) -> Error {
    Error::Format {
        path: path.to_path_buf(),
        reason: e.to_string(),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn tiny(delta: f64) -> ToyConfig {
        ToyConfig {
            delta,
            duration_s: 0.25,
            embedding_dim: 8,
            train: TrainConfig {
                epochs: 2,
                sounds_per_epoch: 40,
                batch_size: 16,
                replicas: 1,
                ..ToyConfig::default().train
            },
            ..ToyConfig::default()
        }
    }

    #[test]
    fn zero_delta_has_zero_alignment() {
        let out = train_toy(&tiny(0.0)).unwrap();
        assert_eq!(out.trace.len(), 4);
        assert!(out.trace.iter().all(|r| r.align == 0.0));
    }

    #[test]
    fn reproducible() {
        let a = train_toy(&tiny(0.1)).unwrap();
        let b = train_toy(&tiny(0.1)).unwrap();
        assert_eq!(a.trace, b.trace);
        assert_eq!(a.encoder.params(), b.encoder.params());
        assert!(a.trace.iter().all(|r| r.unif <= 0.0 && r.align >= 0.0));
    }

    #[test]
    fn divergence_is_reported() {
        let mut cfg = tiny(0.1);
        cfg.train.base_lr = Some(1e300);
        let err = train_toy(&cfg).unwrap_err();
        assert_eq!(err.kind(), crate::ErrorKind::Numerical);
    }

    #[test]
    fn trailing_singleton_dropped() {
        assert_eq!(batch_sizes(33, 16), vec![16, 16]);
        assert_eq!(batch_sizes(34, 16), vec![16, 16, 2]);
    }

    #[test]
    fn trace_csv_has_header() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("trace.csv");
        let rows = [TraceRow {
            epoch: 0,
            split: Split::Val,
            align: 0.5,
            unif: -1.0,
            total: -0.5,
            lr: 0.03,
        }];
        write_trace_csv(&p, &rows).unwrap();
        let text = std::fs::read_to_string(&p).unwrap();
        assert!(text.starts_with("epoch,split,align,unif,total,lr\n0,val,"));
    }
}
