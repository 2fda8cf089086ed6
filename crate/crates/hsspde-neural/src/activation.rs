//! Leaky rectifier with a learnable slope.

use crate::tensor::Tensor;

/// Elementwise `x if x >= 0 else alpha * x`. At `alpha = 1` this is the
/// identity, which is the initialization used everywhere so layers start out
/// in their linear regime.
pub fn leaky_relu(x: &Tensor, alpha: f64) -> Tensor {
    let mut out = x.clone();
    for v in out.data_mut() {
        if *v < 0.0 {
            *v *= alpha;
        }
    }
    out
}

/// Reverse-mode rule. Returns `dx = dy .* (1 if x >= 0 else alpha)` and the
/// slope gradient `dalpha = sum over entries with x < 0 of dy * x`.
pub fn leaky_relu_vjp(x: &Tensor, alpha: f64, dy: &Tensor) -> (Tensor, f64) {
    debug_assert_eq!(x.shape(), dy.shape());
    let mut dx = dy.clone();
    let mut dalpha = 0.0;
    for (g, v) in dx.data_mut().iter_mut().zip(x.data()) {
        if *v < 0.0 {
            dalpha += *g * *v;
            *g *= alpha;
        }
    }
    (dx, dalpha)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn unit_slope_is_identity_but_still_accumulates_dalpha() {
        let x = Tensor::from_vec(&[4], vec![1.0, -2.0, 0.0, -0.5]).unwrap();
        let y = leaky_relu(&x, 1.0);
        assert_eq!(y, x);
        let dy = Tensor::scalar_filled(&[4], 1.0);
        let (_, dalpha) = leaky_relu_vjp(&x, 1.0, &dy);
        assert_eq!(dalpha, -2.5);
    }

    #[test]
    fn analytic_point_value() {
        let x = Tensor::from_vec(&[1], vec![-2.0]).unwrap();
        let y = leaky_relu(&x, 0.5);
        assert_eq!(y.data(), &[-1.0]);
        let dy = Tensor::from_vec(&[1], vec![1.0]).unwrap();
        let (dx, dalpha) = leaky_relu_vjp(&x, 0.5, &dy);
        assert_eq!(dalpha, -2.0);
        assert_eq!(dx.data(), &[0.5]);
    }

    #[test]
    fn vjp_matches_central_finite_differences() {
        let vals: Vec<f64> = (0..16).map(|i| ((i * 31 + 7) as f64 * 0.73).sin()).collect();
        let x = Tensor::from_vec(&[16], vals).unwrap();
        let dy = Tensor::from_vec(&[16], (0..16).map(|i| 0.3 + 0.1 * i as f64).collect()).unwrap();
        let alpha = 0.37;
        let h = 1e-6;

        let loss = |t: &Tensor, a: f64| -> f64 {
            leaky_relu(t, a)
                .data()
                .iter()
                .zip(dy.data())
                .map(|(y, w)| y * w)
                .sum()
        };

        let (dx, dalpha) = leaky_relu_vjp(&x, alpha, &dy);
        for i in 0..16 {
            let mut xp = x.clone();
            let mut xm = x.clone();
            xp.data_mut()[i] += h;
            xm.data_mut()[i] -= h;
            let fd = (loss(&xp, alpha) - loss(&xm, alpha)) / (2.0 * h);
            let got = dx.data()[i];
            assert!(
                (fd - got).abs() <= 1e-6 * (1.0 + fd.abs()),
                "entry {i}: fd {fd} vs analytic {got}"
            );
        }
        let fd_alpha = (loss(&x, alpha + h) - loss(&x, alpha - h)) / (2.0 * h);
        assert!((fd_alpha - dalpha).abs() <= 1e-6 * (1.0 + fd_alpha.abs()));
    }
}
