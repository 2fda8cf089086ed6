//! Global-norm clipping and Adam with decoupled weight decay.

use crate::{OptimError, Result, TrainConfig};
use hsspde_neural::GradientSet;

/// First/second moment estimates, shape-congruent with the flat parameters.
#[derive(Debug, Clone, PartialEq)]
pub struct AdamWState {
    pub m: Vec<f64>,
    pub v: Vec<f64>,
    pub step: u64,
}

impl AdamWState {
    pub fn zeros(n: usize) -> Self {
        Self {
            m: vec![0.0; n],
            v: vec![0.0; n],
            step: 0,
        }
    }
}

/// Scales all gradient blocks by `max_norm / g` when the global l2 norm `g`
/// exceeds `max_norm`; returns the pre-clip norm.
pub fn clip_global_norm(grads: &mut GradientSet, max_norm: f64) -> f64 {
    let norm = grads.norm2();
    if norm > max_norm && norm > 0.0 {
        let s = max_norm / norm;
        for g in &mut grads.data {
            *g *= s;
        }
    }
    norm
}

/// One decoupled-weight-decay Adam update with bias-corrected moments.
/// Entries where `decay_mask` is false (the activation slopes) receive no
/// weight decay.
pub fn adamw_step(
    params: &mut [f64],
    grads: &GradientSet,
    state: &mut AdamWState,
    lr: f64,
    config: &TrainConfig,
    decay_mask: &[bool],
) -> Result<()> {
    let n = params.len();
    if grads.data.len() != n || state.m.len() != n || decay_mask.len() != n {
        return Err(OptimError::Shape {
            context: format!(
                "adamw: params {n}, grads {}, state {}, mask {}",
                grads.data.len(),
                state.m.len(),
                decay_mask.len()
            ),
        });
    }
    state.step += 1;
    let (b1, b2) = (config.beta1, config.beta2);
    let bc1 = 1.0 - b1.powi(state.step as i32);
    let bc2 = 1.0 - b2.powi(state.step as i32);
    for i in 0..n {
        let g = grads.data[i];
        state.m[i] = b1 * state.m[i] + (1.0 - b1) * g;
        state.v[i] = b2 * state.v[i] + (1.0 - b2) * g * g;
        let mhat = state.m[i] / bc1;
        let vhat = state.v[i] / bc2;
        let mut update = mhat / (vhat.sqrt() + config.eps_adam);
        if decay_mask[i] {
            update += config.weight_decay * params[i];
        }
        params[i] -= lr * update;
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn config() -> TrainConfig {
        TrainConfig {
            weight_decay: 0.0,
            ..TrainConfig::default()
        }
    }

    #[test]
    fn zero_gradient_zero_decay_leaves_params_unchanged() {
        let mut params = vec![1.0, -2.0, 0.5];
        let grads = GradientSet::zeros(3);
        let mut state = AdamWState::zeros(3);
        adamw_step(&mut params, &grads, &mut state, 0.1, &config(), &[true; 3]).unwrap();
        assert_eq!(params, vec![1.0, -2.0, 0.5]);
    }

    #[test]
    fn first_step_magnitude_matches_hand_evaluation() {
        // From zero moments with g = 1: bias correction cancels exactly, so
        // the update is -lr / (1 + eps).
        let cfg = config();
        let mut params = vec![0.0];
        let grads = GradientSet { data: vec![1.0] };
        let mut state = AdamWState::zeros(1);
        adamw_step(&mut params, &grads, &mut state, 0.1, &cfg, &[true]).unwrap();
        let expect = -0.1 * (1.0 / (1.0 + cfg.eps_adam));
        assert!((params[0] - expect).abs() < 1e-15);
    }

    #[test]
    fn weight_decay_is_decoupled_and_masked() {
        let cfg = TrainConfig {
            weight_decay: 0.01,
            ..TrainConfig::default()
        };
        let mut params = vec![2.0, 2.0];
        let grads = GradientSet::zeros(2);
        let mut state = AdamWState::zeros(2);
        // Entry 0 decays, entry 1 (an alpha) does not.
        adamw_step(&mut params, &grads, &mut state, 0.5, &cfg, &[true, false]).unwrap();
        assert!((params[0] - 2.0 * (1.0 - 0.5 * 0.01)).abs() < 1e-15);
        assert_eq!(params[1], 2.0);
    }

    #[test]
    fn clip_is_noop_below_threshold_and_exact_at_threshold() {
        let mut g = GradientSet {
            data: vec![0.3, 0.4],
        };
        let norm = clip_global_norm(&mut g, 1.0);
        assert!((norm - 0.5).abs() < 1e-15);
        assert_eq!(g.data, vec![0.3, 0.4]);

        let mut g = GradientSet {
            data: vec![3.0, 4.0],
        };
        let norm = clip_global_norm(&mut g, 1.0);
        assert!((norm - 5.0).abs() < 1e-15);
        let post = g.norm2();
        assert!((post - 1.0).abs() <= 1e-12);
    }

    #[test]
    fn multi_block_clip_never_exceeds_max() {
        let mut g = GradientSet {
            data: (0..100).map(|i| (i as f64 * 0.77).sin() * 3.0).collect(),
        };
        clip_global_norm(&mut g, 0.25);
        assert!(g.norm2() <= 0.25 + 1e-12);
    }
}
