use serde::{Deserialize, Serialize};

use super::LossConfig;
use crate::error::{Error, Result};

/// Optimization settings for the contrastive objective.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct TrainConfig {
    pub epochs: u64,
    pub sounds_per_epoch: usize,
    /// Fraction of each epoch's sounds held out for validation.
    pub val_fraction: f64,
    /// Batch size per replica.
    pub batch_size: usize,
    /// Data-parallel replicas; the effective batch is `batch_size × replicas`.
    pub replicas: usize,
    /// Overrides the linear-scaling default of `0.12 × effective batch / 256`.
    pub base_lr: Option<f64>,
    pub weight_decay: f64,
    pub momentum: f64,
    pub gamma: f64,
    /// Fractions of `epochs` at which the rate drops by `gamma`.
    pub milestones: Vec<f64>,
    pub loss: LossConfig,
}

impl Default for TrainConfig {
    fn default() -> Self {
        Self {
            epochs: 200,
            sounds_per_epoch: 100_000,
            val_fraction: 0.1,
            batch_size: 768,
            replicas: 2,
            base_lr: None,
            weight_decay: 1e-6,
            momentum: 0.9,
            gamma: 0.1,
            milestones: vec![0.775, 0.85, 0.925],
            loss: LossConfig::default(),
        }
    }
}

impl TrainConfig {
    pub fn validate(&self) -> Result<()> {
        if self.epochs == 0 || self.sounds_per_epoch == 0 || self.batch_size == 0 || self.replicas == 0 {
            return Err(Error::invalid("epochs, sounds per epoch, batch size and replicas must be positive"));
        }
        if !(0.0..1.0).contains(&self.val_fraction) {
            return Err(Error::invalid("validation fraction must lie in [0, 1)"));
        }
        if self.milestones.iter().any(|m| !(*m > 0.0 && *m < 1.0))
            || self.milestones.windows(2).any(|w| w[0] >= w[1])
        {
            return Err(Error::invalid("milestones must be strictly increasing fractions in (0, 1)"));
        }
        let positive = [self.gamma, self.base_lr()];
        if positive.iter().any(|v| !(*v > 0.0 && v.is_finite())) {
            return Err(Error::invalid("learning rate and gamma must be positive"));
        }
        if !(self.weight_decay >= 0.0) || !(0.0..1.0).contains(&self.momentum) {
            return Err(Error::invalid("weight decay must be non-negative and momentum in [0, 1)"));
        }
        let l = &self.loss;
        if !(l.lambda_align >= 0.0 && l.lambda_unif >= 0.0 && l.align_alpha > 0.0 && l.unif_t > 0.0) {
            return Err(Error::invalid("loss weights must be non-negative and alpha, t positive"));
        }
        Ok(())
    }

    pub fn base_lr(&self) -> f64 {
        self.base_lr
            .unwrap_or(0.12 * (self.batch_size * self.replicas) as f64 / 256.0)
    }

    /// First epoch at which each milestone is in effect.
    pub fn milestone_epochs(&self) -> Vec<u64> {
        // The small slack keeps exact products such as 0.775 × 200 from
        // rounding up past the intended epoch.
        self.milestones
            .iter()
            .map(|f| (f * self.epochs as f64 - 1e-9).ceil() as u64)
            .collect()
    }
}

/// Learning rate used during `epoch` (zero-based).
pub fn lr_at(epoch: u64, config: &TrainConfig) -> f64 {
    let passed = config.milestone_epochs().iter().filter(|&&m| epoch >= m).count();
    config.base_lr() * config.gamma.powi(passed as i32)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn default_schedule() {
        let c = TrainConfig::default();
        assert!((c.base_lr() - 0.72).abs() < 1e-12);
        assert_eq!(c.milestone_epochs(), vec![155, 170, 185]);
        assert_eq!(lr_at(0, &c), c.base_lr());
        assert_eq!(lr_at(154, &c), c.base_lr());
        assert!((lr_at(155, &c) - 0.072).abs() < 1e-12);
        assert!((lr_at(185, &c) - 0.72e-3).abs() < 1e-12);
        let drops = (1..200).filter(|&e| lr_at(e, &c) < lr_at(e - 1, &c)).count();
        assert_eq!(drops, 3);
    }

    #[test]
    fn validation() {
        assert!(TrainConfig::default().validate().is_ok());
        let bad = TrainConfig {
            milestones: vec![0.5, 0.4],
            ..TrainConfig::default()
        };
        assert!(bad.validate().is_err());
        let bad = TrainConfig {
            base_lr: Some(0.0),
            ..TrainConfig::default()
        };
        assert!(bad.validate().is_err());
    }

    #[test]
    fn json_roundtrip() {
        let c = TrainConfig::default();
        let s = serde_json::to_string(&c).unwrap();
        assert_eq!(serde_json::from_str::<TrainConfig>(&s).unwrap(), c);
        let p: TrainConfig = serde_json::from_str(r#"{"epochs": 10}"#).unwrap();
        assert_eq!(p.epochs, 10);
    }
}
