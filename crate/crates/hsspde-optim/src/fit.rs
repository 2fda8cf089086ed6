//! The training loop.

use crate::{adamw_step, alpha_penalty, clip_global_norm, cosine_lr, mse_loss};
use crate::{AdamWState, OptimError, Result, TrainConfig};
use hsspde_metrics::relative_l2;
use hsspde_neural::{NeuralHssModel, Tensor};
use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use std::io::Write;
use std::path::Path;
use std::time::Instant;

#[derive(Debug, Clone, PartialEq)]
pub struct StepRecord {
    pub epoch: usize,
    pub step: usize,
    pub lr: f64,
    pub train_loss: f64,
}

/// Wall-time statistics; the only non-deterministic part of a report.
#[derive(Debug, Clone, Default)]
pub struct TimeStats {
    pub mean_ns: f64,
    pub median_ns: f64,
    pub max_ns: f64,
}

#[derive(Debug, Clone)]
pub struct TrainReport {
    pub steps: Vec<StepRecord>,
    /// Mean step loss per epoch.
    pub epoch_loss: Vec<f64>,
    /// Max |alpha - 1| over layers, per epoch.
    pub alpha_dev: Vec<f64>,
    /// (epoch, mean relative L2 on the held-out set).
    pub evals: Vec<(usize, f64)>,
    pub param_count: usize,
    pub final_train_loss: f64,
    pub step_time: TimeStats,
}

impl TrainReport {
    /// One CSV row per optimization step; the eval column is filled on the
    /// last step of epochs where an evaluation ran.
    pub fn write_csv(&self, path: &Path) -> Result<()> {
        let mut f = std::fs::File::create(path)?;
        writeln!(f, "epoch,step,lr,train_loss,eval_metric")?;
        let mut eval_by_epoch = std::collections::BTreeMap::new();
        for (e, v) in &self.evals {
            eval_by_epoch.insert(*e, *v);
        }
        for (i, s) in self.steps.iter().enumerate() {
            let last_of_epoch =
                i + 1 == self.steps.len() || self.steps[i + 1].epoch != s.epoch;
            let eval = if last_of_epoch {
                eval_by_epoch
                    .get(&s.epoch)
                    .map(|v| v.to_string())
                    .unwrap_or_default()
            } else {
                String::new()
            };
            writeln!(f, "{},{},{},{},{}", s.epoch, s.step, s.lr, s.train_loss, eval)?;
        }
        Ok(())
    }
}

/// Shuffled mini-batch training with the cosine schedule, gradient clipping
/// and AdamW. Loss is `mse + alpha_penalty`. Deterministic for fixed seeds;
/// aborts on a non-finite loss.
pub fn fit(
    model: &mut NeuralHssModel,
    inputs: &Tensor,
    targets: &Tensor,
    eval_set: Option<(&Tensor, &Tensor)>,
    config: &TrainConfig,
) -> Result<TrainReport> {
    config.validate()?;
    if inputs.ndim() < 1 || inputs.shape()[0] == 0 {
        return Err(OptimError::EmptyDataset);
    }
    let n = inputs.shape()[0];
    if targets.ndim() < 1 || targets.shape()[0] != n {
        return Err(OptimError::Shape {
            context: format!(
                "inputs have {n} samples, targets {:?}",
                targets.shape()
            ),
        });
    }

    let layout = model.layout();
    let decay_mask: Vec<bool> = {
        let mut mask = vec![true; layout.total];
        for b in layout.blocks.iter().filter(|b| b.is_alpha) {
            for m in &mut mask[b.offset..b.offset + b.len] {
                *m = false;
            }
        }
        mask
    };
    let alpha_offsets: Vec<usize> = layout
        .blocks
        .iter()
        .filter(|b| b.is_alpha)
        .map(|b| b.offset)
        .collect();

    let steps_per_epoch = n.div_ceil(config.batch_size);
    let total_steps = config.epochs * steps_per_epoch;
    let sample_shape = inputs.shape()[1..].to_vec();
    let target_shape = targets.shape()[1..].to_vec();

    let mut params = model.write_params();
    let mut state = AdamWState::zeros(params.len());
    let mut rng = ChaCha8Rng::seed_from_u64(config.shuffle_seed);
    let mut order: Vec<usize> = (0..n).collect();

    let mut report = TrainReport {
        steps: Vec::with_capacity(total_steps),
        epoch_loss: Vec::with_capacity(config.epochs),
        alpha_dev: Vec::with_capacity(config.epochs),
        evals: Vec::new(),
        param_count: layout.total,
        final_train_loss: f64::NAN,
        step_time: TimeStats::default(),
    };
    let mut durations = Vec::with_capacity(total_steps);
    let mut global_step = 0usize;

    for epoch in 0..config.epochs {
        order.shuffle(&mut rng);
        let mut epoch_sum = 0.0;
        for batch_ids in order.chunks(config.batch_size) {
            let t0 = Instant::now();
            let b = batch_ids.len();
            let mut bshape = vec![b];
            bshape.extend_from_slice(&sample_shape);
            let mut binput = Tensor::zeros(&bshape);
            let mut tshape = vec![b];
            tshape.extend_from_slice(&target_shape);
            let mut btarget = Tensor::zeros(&tshape);
            for (slot, &idx) in batch_ids.iter().enumerate() {
                binput.chunk_mut(b, slot).copy_from_slice(inputs.chunk(n, idx));
                btarget
                    .chunk_mut(b, slot)
                    .copy_from_slice(targets.chunk(n, idx));
            }

            let (pred, tape) = model.forward(&binput)?;
            let (mse, dpred) = mse_loss(&pred, &btarget)?;
            let (mut grads, _) = model.vjp(&tape, &dpred)?;
            let alphas = model.alphas();
            let (penalty, dalphas) = alpha_penalty(&alphas, config.alpha_penalty);
            for (off, da) in alpha_offsets.iter().zip(&dalphas) {
                grads.data[*off] += da;
            }
            let loss = mse + penalty;
            if !loss.is_finite() {
                return Err(OptimError::NonFiniteLoss {
                    epoch,
                    step: global_step,
                    loss,
                });
            }

            clip_global_norm(&mut grads, config.grad_clip_norm);
            let lr = if total_steps == 1 {
                config.peak_lr
            } else {
                cosine_lr(global_step, total_steps - 1, config.peak_lr, config.min_lr)?
            };
            adamw_step(&mut params, &grads, &mut state, lr, config, &decay_mask)?;
            model.read_params(&params)?;

            report.steps.push(StepRecord {
                epoch,
                step: global_step,
                lr,
                train_loss: loss,
            });
            epoch_sum += loss;
            global_step += 1;
            durations.push(t0.elapsed().as_nanos() as f64);
        }
        report.epoch_loss.push(epoch_sum / steps_per_epoch as f64);
        report.alpha_dev.push(
            model
                .alphas()
                .iter()
                .map(|a| (a - 1.0).abs())
                .fold(0.0, f64::max),
        );
        if config.eval_every > 0 && (epoch + 1) % config.eval_every == 0 {
            if let Some((ein, etg)) = eval_set {
                let (pred, _) = model.forward(ein)?;
                report.evals.push((epoch, relative_l2(&pred, etg)?));
            }
        }
    }

    report.final_train_loss = *report.epoch_loss.last().unwrap();
    durations.sort_by(|a, b| a.partial_cmp(b).unwrap());
    report.step_time = TimeStats {
        mean_ns: durations.iter().sum::<f64>() / durations.len() as f64,
        median_ns: durations[durations.len() / 2],
        max_ns: *durations.last().unwrap(),
    };
    Ok(report)
}
