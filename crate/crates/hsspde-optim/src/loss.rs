//! Training losses.

use crate::{OptimError, Result};
use hsspde_neural::Tensor;

/// Mean squared error over the leading batch axis:
/// `(1/B) sum_b ||pred_b - target_b||^2`, with gradient
/// `2 (pred - target) / B`.
pub fn mse_loss(pred: &Tensor, target: &Tensor) -> Result<(f64, Tensor)> {
    if pred.shape() != target.shape() || pred.ndim() < 1 {
        return Err(OptimError::Shape {
            context: format!(
                "mse between {:?} and {:?}",
                pred.shape(),
                target.shape()
            ),
        });
    }
    let batch = pred.shape()[0].max(1) as f64;
    let mut grad = pred.clone();
    grad.axpy(-1.0, target);
    let sq: f64 = grad.data().iter().map(|v| v * v).sum();
    grad.scale(2.0 / batch);
    Ok((sq / batch, grad))
}

/// `lambda/2 * sum_i (alpha_i - 1)^2` with per-slope gradient
/// `lambda * (alpha_i - 1)`.
pub fn alpha_penalty(alphas: &[f64], lambda: f64) -> (f64, Vec<f64>) {
    let value = 0.5 * lambda * alphas.iter().map(|a| (a - 1.0) * (a - 1.0)).sum::<f64>();
    let grads = alphas.iter().map(|a| lambda * (a - 1.0)).collect();
    (value, grads)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn equal_tensors_give_zero_loss_and_gradient() {
        let a = Tensor::from_vec(&[2, 3], vec![1.0, -2.0, 3.0, 0.5, 0.0, -1.0]).unwrap();
        let (loss, grad) = mse_loss(&a, &a).unwrap();
        assert_eq!(loss, 0.0);
        assert!(grad.data().iter().all(|v| *v == 0.0));
    }

    #[test]
    fn single_sample_unit_offsets() {
        // One sample, pred - target = (1, 1): loss = 2.
        let pred = Tensor::from_vec(&[1, 2], vec![2.0, 3.0]).unwrap();
        let target = Tensor::from_vec(&[1, 2], vec![1.0, 2.0]).unwrap();
        let (loss, grad) = mse_loss(&pred, &target).unwrap();
        assert_eq!(loss, 2.0);
        assert_eq!(grad.data(), &[2.0, 2.0]);
    }

    #[test]
    fn random_batch_matches_naive_double_loop() {
        let pred =
            Tensor::from_vec(&[3, 4], (0..12).map(|i| (i as f64 * 0.37).sin()).collect()).unwrap();
        let target =
            Tensor::from_vec(&[3, 4], (0..12).map(|i| (i as f64 * 0.11).cos()).collect()).unwrap();
        let (loss, _) = mse_loss(&pred, &target).unwrap();
        let mut naive = 0.0;
        for b in 0..3 {
            let mut s = 0.0;
            for j in 0..4 {
                let d = pred.data()[b * 4 + j] - target.data()[b * 4 + j];
                s += d * d;
            }
            naive += s;
        }
        naive /= 3.0;
        assert!((loss - naive).abs() <= 1e-12 * (1.0 + naive));
    }

    #[test]
    fn mse_gradient_matches_finite_differences() {
        let pred =
            Tensor::from_vec(&[2, 3], (0..6).map(|i| 0.3 * i as f64 - 1.0).collect()).unwrap();
        let target =
            Tensor::from_vec(&[2, 3], (0..6).map(|i| (i as f64).sin()).collect()).unwrap();
        let (_, grad) = mse_loss(&pred, &target).unwrap();
        let h = 1e-7;
        for i in 0..6 {
            let mut p = pred.clone();
            p.data_mut()[i] += h;
            let (lp, _) = mse_loss(&p, &target).unwrap();
            p.data_mut()[i] -= 2.0 * h;
            let (lm, _) = mse_loss(&p, &target).unwrap();
            let fd = (lp - lm) / (2.0 * h);
            assert!((fd - grad.data()[i]).abs() <= 1e-6 * (1.0 + fd.abs()));
        }
    }

    #[test]
    fn alpha_penalty_examples() {
        let (v, g) = alpha_penalty(&[1.0, 1.0, 1.0], 5.0);
        assert_eq!(v, 0.0);
        assert!(g.iter().all(|x| *x == 0.0));

        let (v, _) = alpha_penalty(&[2.0, -3.0], 0.0);
        assert_eq!(v, 0.0);

        let (v, g) = alpha_penalty(&[1.5, 0.5], 2.0);
        assert!((v - 0.5).abs() < 1e-15);
        assert_eq!(g, vec![1.0, -1.0]);
    }
}
