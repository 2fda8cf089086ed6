//! Training machinery: MSE and slope-penalty losses, cosine schedule, global
//! gradient clipping, decoupled-weight-decay Adam, and the training loop.

pub mod adamw;
pub mod fit;
pub mod loss;
pub mod schedule;

pub use adamw::{adamw_step, clip_global_norm, AdamWState};
pub use fit::{fit, StepRecord, TimeStats, TrainReport};
pub use loss::{alpha_penalty, mse_loss};
pub use schedule::cosine_lr;

use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Error)]
pub enum OptimError {
    #[error("invalid training config: {0}")]
    BadConfig(String),

    #[error("schedule step {step} out of range (total {total})")]
    ScheduleRange { step: usize, total: usize },

    #[error("empty dataset")]
    EmptyDataset,

    #[error("non-finite loss {loss} at epoch {epoch}, step {step}; aborting")]
    NonFiniteLoss { epoch: usize, step: usize, loss: f64 },

    #[error("shape mismatch: {context}")]
    Shape { context: String },

    #[error(transparent)]
    Neural(#[from] hsspde_neural::NeuralError),

    #[error(transparent)]
    Metrics(#[from] hsspde_metrics::MetricsError),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, OptimError>;

/// Optimizer, schedule and penalty settings.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct TrainConfig {
    pub epochs: usize,
    pub batch_size: usize,
    pub peak_lr: f64,
    pub min_lr: f64,
    pub weight_decay: f64,
    pub beta1: f64,
    pub beta2: f64,
    pub eps_adam: f64,
    pub grad_clip_norm: f64,
    /// Coefficient of the `lambda/2 * sum (alpha_i - 1)^2` penalty.
    pub alpha_penalty: f64,
    pub shuffle_seed: u64,
    /// Evaluate on the held-out set every this many epochs (0 = never).
    pub eval_every: usize,
}

impl Default for TrainConfig {
    fn default() -> Self {
        Self {
            epochs: 500,
            batch_size: 256,
            peak_lr: 1e-3,
            min_lr: 1e-5,
            weight_decay: 1e-3,
            beta1: 0.9,
            beta2: 0.99,
            eps_adam: 1e-8,
            grad_clip_norm: 1.0,
            alpha_penalty: 0.0,
            shuffle_seed: 0,
            eval_every: 0,
        }
    }
}

impl TrainConfig {
    pub fn validate(&self) -> Result<()> {
        if self.batch_size == 0 {
            return Err(OptimError::BadConfig("batch_size must be >= 1".into()));
        }
        if self.epochs == 0 {
            return Err(OptimError::BadConfig("epochs must be >= 1".into()));
        }
        if !(self.peak_lr >= self.min_lr && self.min_lr >= 0.0) {
            return Err(OptimError::BadConfig(format!(
                "need peak_lr >= min_lr >= 0, got peak {} min {}",
                self.peak_lr, self.min_lr
            )));
        }
        if self.alpha_penalty < 0.0 {
            return Err(OptimError::BadConfig("alpha_penalty must be >= 0".into()));
        }
        if !(0.0..1.0).contains(&self.beta1) || !(0.0..1.0).contains(&self.beta2) {
            return Err(OptimError::BadConfig("betas must lie in [0, 1)".into()));
        }
        Ok(())
    }
}
