//! Cosine learning-rate schedule, no warmup.

use crate::{OptimError, Result};

/// `min + (peak - min) * (1 + cos(pi * step / total)) / 2`.
pub fn cosine_lr(step: usize, total_steps: usize, peak: f64, min: f64) -> Result<f64> {
    if step > total_steps || total_steps == 0 {
        return Err(OptimError::ScheduleRange {
            step,
            total: total_steps,
        });
    }
    let phase = std::f64::consts::PI * step as f64 / total_steps as f64;
    Ok(min + 0.5 * (peak - min) * (1.0 + phase.cos()))
}
