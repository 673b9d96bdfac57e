//! Deterministic mini-batch SGD driver.
//!
//! The driver owns epoch scheduling only: a seeded shuffle per epoch, fixed
//! batch boundaries (last partial batch used as-is), and a per-epoch mean
//! loss trace. Objectives compute their own gradients and apply their own
//! updates so one driver serves both network parameters and a free
//! embedding matrix.

use crate::error::{Error, Result};
use crate::rng::{seeded, shuffled_indices, TAG_SHUFFLE};

/// Mini-batch SGD settings. `learning_rate = 0` is a valid no-op step.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SgdConfig {
    pub learning_rate: f64,
    pub batch_size: usize,
    pub epochs: usize,
    pub seed: u64,
}

impl SgdConfig {
    /// Paper defaults: lr 0.0003, batch 256, seed 3407.
    pub fn new(epochs: usize) -> Self {
        SgdConfig {
            learning_rate: 3e-4,
            batch_size: 256,
            epochs,
            seed: 3407,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.learning_rate >= 0.0 && self.learning_rate.is_finite()) {
            return Err(Error::InvalidConfig(format!(
                "learning_rate must be finite and >= 0, got {}",
                self.learning_rate
            )));
        }
        if self.batch_size < 2 {
            return Err(Error::InvalidConfig(format!(
                "batch_size must be >= 2, got {}",
                self.batch_size
            )));
        }
        if self.epochs < 1 {
            return Err(Error::InvalidConfig("epochs must be >= 1".into()));
        }
        Ok(())
    }
}

/// One training problem driven by [`sgd_train`].
pub trait SgdObjective {
    /// Compute the loss of `batch` (row indices into the training data),
    /// apply one gradient step scaled by `lr`, and return the batch loss
    /// measured before the step.
    fn batch_step(&mut self, batch: &[usize], lr: f64) -> Result<f64>;
}

/// Run mini-batch SGD and return the per-epoch trace of
/// `total batch loss / n_rows`. Bit-reproducible for a fixed config.
pub fn sgd_train<O: SgdObjective>(objective: &mut O, n_rows: usize, cfg: &SgdConfig) -> Result<Vec<f64>> {
    cfg.validate()?;
    if n_rows == 0 {
        return Err(Error::TooFew {
            what: "training rows",
            min: 1,
            actual: 0,
        });
    }
    let mut rng = seeded(cfg.seed, TAG_SHUFFLE);
    let mut trace = Vec::with_capacity(cfg.epochs);
    for epoch in 0..cfg.epochs {
        let order = shuffled_indices(&mut rng, n_rows);
        let mut epoch_loss = 0.0;
        for batch in order.chunks(cfg.batch_size) {
            let loss = objective.batch_step(batch, cfg.learning_rate)?;
            if !loss.is_finite() {
                return Err(Error::NonFiniteLoss { epoch, value: loss });
            }
            epoch_loss += loss;
        }
        trace.push(epoch_loss / n_rows as f64);
    }
    Ok(trace)
}
