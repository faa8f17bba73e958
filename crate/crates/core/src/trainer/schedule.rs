use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::scalar::Real;

/// Arithmetic used for training.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Precision {
    F32,
    F64,
}

impl Precision {
    pub fn of<T: Real>() -> Self {
        if T::BYTES == 4 {
            Precision::F32
        } else {
            Precision::F64
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TrainConfig {
    pub batch_size: usize,
    pub epochs: usize,
    pub beta1: f64,
    pub beta2: f64,
    pub adam_eps: f64,
    pub base_lr: f64,
    pub warmup_epochs: usize,
    pub halve_every: usize,
    pub seed: u64,
    pub precision: Precision,
}

impl Default for TrainConfig {
    fn default() -> Self {
        Self {
            batch_size: 8,
            epochs: 60,
            beta1: 0.9,
            beta2: 0.999,
            adam_eps: 1e-8,
            base_lr: 1e-4,
            warmup_epochs: 5,
            halve_every: 10,
            seed: 0,
            precision: Precision::F32,
        }
    }
}

impl TrainConfig {
    pub fn validate(&self) -> Result<()> {
        let positive = [self.beta1, self.beta2, self.adam_eps, self.base_lr];
        if positive.iter().any(|v| !(*v > 0.0) || !v.is_finite()) || self.beta1 >= 1.0 || self.beta2 >= 1.0 {
            return Err(Error::InvalidParameter(
                "Adam betas must lie in (0,1); eps and learning rate must be positive".into(),
            ));
        }
        if self.batch_size == 0 || self.epochs == 0 || self.halve_every == 0 {
            return Err(Error::InvalidParameter("batch size, epochs and halving period must be positive".into()));
        }
        if self.warmup_epochs >= self.epochs {
            return Err(Error::InvalidParameter(format!(
                "warmup ({}) must be shorter than training ({} epochs)",
                self.warmup_epochs, self.epochs
            )));
        }
        Ok(())
    }
}

/// Linear warmup from base/W to base over epochs 0..W, then halving every
/// `halve_every` epochs counted from the end of warmup.
pub fn lr_at(epoch: usize, cfg: &TrainConfig) -> Result<f64> {
    if epoch >= cfg.epochs {
        return Err(Error::InvalidParameter(format!(
            "epoch {epoch} outside 0..{}",
            cfg.epochs
        )));
    }
    let w = cfg.warmup_epochs;
    if epoch < w {
        return Ok(cfg.base_lr * (epoch + 1) as f64 / w as f64);
    }
    let halvings = (epoch - w) / cfg.halve_every;
    Ok(cfg.base_lr / 2f64.powi(halvings as i32))
}
