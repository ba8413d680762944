//! On-the-fly pair stream: an endless (or epoch-bounded) iterator of
//! doppelganger batches, optionally augmented and converted to log-mel.
//! This is the data source exposed to external training frameworks.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::frontend::{MelFrontend, MelSpec};
use crate::fx::{FxChain, FxConfig};
use crate::rng::{BatchKey, StreamId};
use crate::sampler::{DoppelgangerSampler, PairBatch};
use crate::synth::{build_architecture, ArchitectureName, AudioBatch, DEFAULT_DURATION_S, DEFAULT_SAMPLE_RATE};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum StreamOutput {
    #[default]
    Audio,
    Mel,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PairStreamConfig {
    pub arch: ArchitectureName,
    pub delta: f64,
    pub batch_size: usize,
    pub seed: u64,
    pub sample_rate_hz: u32,
    pub duration_s: f64,
    pub sounds_per_epoch: usize,
    /// `None` streams forever.
    pub epochs: Option<u64>,
    pub output: StreamOutput,
    pub fx: Option<FxConfig>,
}

impl Default for PairStreamConfig {
    fn default() -> Self {
        Self {
            arch: ArchitectureName::Voice,
            delta: 0.25,
            batch_size: 768,
            seed: 0,
            sample_rate_hz: DEFAULT_SAMPLE_RATE,
            duration_s: DEFAULT_DURATION_S,
            sounds_per_epoch: 100_000,
            epochs: None,
            output: StreamOutput::Audio,
            fx: None,
        }
    }
}

impl PairStreamConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.delta >= 0.0 && self.delta.is_finite()) {
            return Err(Error::invalid(format!("delta must be finite and non-negative, got {}", self.delta)));
        }
        if self.batch_size == 0 || self.sounds_per_epoch == 0 {
            return Err(Error::invalid("batch size and sounds per epoch must be positive"));
        }
        if self.sample_rate_hz == 0 || !(self.duration_s > 0.0 && self.duration_s.is_finite()) {
            return Err(Error::invalid("sample rate and duration must be positive"));
        }
        if let Some(fx) = &self.fx {
            fx.validate()?;
        }
        Ok(())
    }

    pub fn batches_per_epoch(&self) -> u64 {
        self.sounds_per_epoch.div_ceil(self.batch_size) as u64
    }

    /// Rows in batch `b` of an epoch: full batches then the remainder.
    pub fn batch_len(&self, b: u64) -> usize {
        let start = b as usize * self.batch_size;
        self.batch_size.min(self.sounds_per_epoch - start)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum PairData {
    Audio(AudioBatch, AudioBatch),
    Mel(MelSpec, MelSpec),
}

#[derive(Debug, Clone, PartialEq)]
pub struct PairItem {
    pub key: BatchKey,
    pub data: PairData,
    pub params: PairBatch,
}

/// Seed for augmenting one side (0 or 1) of a batch.
pub fn fx_seed(key: BatchKey, side: u64) -> u64 {
    key.stream(StreamId::Fx).u64_at(side, 0)
}

#[derive(Debug)]
pub struct PairStream {
    config: PairStreamConfig,
    sampler: DoppelgangerSampler,
    fx: Option<FxChain>,
    frontend: Option<MelFrontend>,
    epoch: u64,
    batch: u64,
}

impl PairStream {
    pub fn new(config: PairStreamConfig) -> Result<Self> {
        config.validate()?;
        let sampler = DoppelgangerSampler::new(
            build_architecture(config.arch),
            config.delta,
            config.sample_rate_hz,
            config.duration_s,
        )?;
        let fx = config
            .fx
            .clone()
            .map(|c| FxChain::new(c, config.sample_rate_hz))
            .transpose()?;
        let frontend = (config.output == StreamOutput::Mel).then(MelFrontend::new);
        Ok(Self {
            config,
            sampler,
            fx,
            frontend,
            epoch: 0,
            batch: 0,
        })
    }

    pub fn config(&self) -> &PairStreamConfig {
        &self.config
    }

    /// Position of the next batch.
    pub fn position(&self) -> (u64, u64) {
        (self.epoch, self.batch)
    }

    /// Jumps to a batch without generating the ones before it.
    pub fn seek(&mut self, epoch: u64, batch: u64) {
        self.epoch = epoch;
        self.batch = batch.min(self.config.batches_per_epoch());
    }

    /// Generates batch `batch` of `epoch` directly.
    pub fn generate(&self, epoch: u64, batch: u64) -> Result<PairItem> {
        if batch >= self.config.batches_per_epoch() {
            return Err(Error::invalid(format!("epoch has only {} batches", self.config.batches_per_epoch())));
        }
        let key = BatchKey::at(self.config.seed, epoch, batch);
        let (mut a, mut b, params) = self.sampler.batch(self.config.batch_len(batch), key)?;
        if let Some(fx) = &self.fx {
            a = fx.apply(&a, fx_seed(key, 0))?;
            b = fx.apply(&b, fx_seed(key, 1))?;
        }
        let data = match &self.frontend {
            Some(fe) => PairData::Mel(fe.batch(&a)?, fe.batch(&b)?),
            None => PairData::Audio(a, b),
        };
        Ok(PairItem { key, data, params })
    }

    /// Advances the cursor, returning the position it pointed at.
    fn advance(&mut self) -> Option<(u64, u64)> {
        if self.batch >= self.config.batches_per_epoch() {
            self.epoch += 1;
            self.batch = 0;
        }
        if self.config.epochs.is_some_and(|e| self.epoch >= e) {
            return None;
        }
        let pos = (self.epoch, self.batch);
        self.batch += 1;
        Some(pos)
    }
}

impl Iterator for PairStream {
    type Item = Result<PairItem>;

    fn next(&mut self) -> Option<Self::Item> {
        let (e, b) = self.advance()?;
        Some(self.generate(e, b))
    }
}
