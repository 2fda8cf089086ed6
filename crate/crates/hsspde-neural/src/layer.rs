//! One-dimensional layers: an HSS-structured linear map (or a plain dense one
//! for the baseline) followed by the learnable-slope activation.

use crate::activation::{leaky_relu, leaky_relu_vjp};
use crate::error::{NeuralError, Result};
use crate::tensor::Tensor;
use hsspde_core::{Hss, Mat, MatvecTrace};

/// HSS linear layer. The weight is a structured `d x d` operator; `alpha` is
/// the activation slope (a parameter even when the activation is disabled, so
/// toggling the activation never changes the parameter census).
#[derive(Debug, Clone)]
pub struct HssLinearLayer {
    pub weight: Hss,
    pub alpha: f64,
    pub use_activation: bool,
}

/// Per-sample matvec traces plus the pre-activation values.
#[derive(Debug)]
pub struct HssLayerTape {
    traces: Vec<MatvecTrace<f64>>,
    pre: Tensor,
}

impl HssLinearLayer {
    pub fn new(weight: Hss, use_activation: bool) -> Self {
        Self {
            weight,
            alpha: 1.0,
            use_activation,
        }
    }

    pub fn dim(&self) -> usize {
        self.weight.dim()
    }

    /// Applies the layer to a tensor whose trailing extent is `d`; all
    /// leading axes are treated as batch.
    pub fn apply(&self, x: &Tensor) -> Result<(Tensor, HssLayerTape)> {
        let d = self.dim();
        if x.shape().last().copied() != Some(d) {
            return Err(NeuralError::ShapeMismatch {
                context: "hss layer input",
                expected: vec![d],
                actual: x.shape().to_vec(),
            });
        }
        let batch = x.leading_count(1)?;
        let mut pre = Tensor::zeros(x.shape());
        let mut traces = Vec::with_capacity(batch);
        for b in 0..batch {
            let (y, trace) = self.weight.matvec_recording(x.chunk(batch, b))?;
            pre.chunk_mut(batch, b).copy_from_slice(&y);
            traces.push(trace);
        }
        let out = if self.use_activation {
            leaky_relu(&pre, self.alpha)
        } else {
            pre.clone()
        };
        Ok((out, HssLayerTape { traces, pre }))
    }

    /// Reverse pass: returns `dx` and accumulates the weight gradient into
    /// `grad.weight` and the slope gradient into `grad.alpha`.
    pub fn vjp(&self, tape: &HssLayerTape, dy: &Tensor, grad: &mut Self) -> Result<Tensor> {
        if dy.shape() != tape.pre.shape() {
            return Err(NeuralError::ShapeMismatch {
                context: "hss layer adjoint",
                expected: tape.pre.shape().to_vec(),
                actual: dy.shape().to_vec(),
            });
        }
        let batch = tape.traces.len();
        if dy.leading_count(1)? != batch {
            return Err(NeuralError::StaleTape {
                recorded: batch,
                needed: dy.leading_count(1)?,
            });
        }
        let dpre = if self.use_activation {
            let (dpre, dalpha) = leaky_relu_vjp(&tape.pre, self.alpha, dy);
            grad.alpha += dalpha;
            dpre
        } else {
            dy.clone()
        };
        let mut dx = Tensor::zeros(dy.shape());
        for b in 0..batch {
            let dxb = self
                .weight
                .matvec_vjp(&tape.traces[b], dpre.chunk(batch, b), &mut grad.weight)?;
            dx.chunk_mut(batch, b).copy_from_slice(&dxb);
        }
        Ok(dx)
    }
}

/// Unstructured linear layer, used by the parameter-matched dense baseline.
/// Maps trailing extent `in_dim` to `out_dim`.
#[derive(Debug, Clone)]
pub struct DenseLayer {
    pub weight: Mat,
    pub alpha: f64,
    pub use_activation: bool,
}

#[derive(Debug)]
pub struct DenseLayerTape {
    input: Tensor,
    pre: Tensor,
}

impl DenseLayer {
    pub fn new(weight: Mat, use_activation: bool) -> Self {
        Self {
            weight,
            alpha: 1.0,
            use_activation,
        }
    }

    pub fn apply(&self, x: &Tensor) -> Result<(Tensor, DenseLayerTape)> {
        if x.shape().last().copied() != Some(self.weight.cols()) {
            return Err(NeuralError::ShapeMismatch {
                context: "dense layer input",
                expected: vec![self.weight.cols()],
                actual: x.shape().to_vec(),
            });
        }
        let batch = x.leading_count(1)?;
        let mut shape = x.shape().to_vec();
        *shape.last_mut().unwrap() = self.weight.rows();
        let mut pre = Tensor::zeros(&shape);
        for b in 0..batch {
            let y = self.weight.matvec(x.chunk(batch, b))?;
            pre.chunk_mut(batch, b).copy_from_slice(&y);
        }
        let out = if self.use_activation {
            leaky_relu(&pre, self.alpha)
        } else {
            pre.clone()
        };
        Ok((
            out,
            DenseLayerTape {
                input: x.clone(),
                pre,
            },
        ))
    }

    pub fn vjp(&self, tape: &DenseLayerTape, dy: &Tensor, grad: &mut Self) -> Result<Tensor> {
        let batch = tape.input.leading_count(1)?;
        let dpre = if self.use_activation {
            let (dpre, dalpha) = leaky_relu_vjp(&tape.pre, self.alpha, dy);
            grad.alpha += dalpha;
            dpre
        } else {
            dy.clone()
        };
        let mut dx = Tensor::zeros(tape.input.shape());
        for b in 0..batch {
            let g = dpre.chunk(batch, b);
            let xb = tape.input.chunk(batch, b);
            // dW += g x^T, dx = W^T g
            for i in 0..self.weight.rows() {
                let gi = g[i];
                if gi != 0.0 {
                    for (j, xj) in xb.iter().enumerate() {
                        grad.weight[(i, j)] += gi * xj;
                    }
                }
            }
            let dxb = self.weight.matvec_transpose(g)?;
            dx.chunk_mut(batch, b).copy_from_slice(&dxb);
        }
        Ok(dx)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use hsspde_core::ClusterTree;

    #[test]
    fn zero_weight_gives_zero_output() {
        let tree = ClusterTree::balanced(8, 1).unwrap();
        let layer = HssLinearLayer::new(Hss::zeros(tree, 1).unwrap(), true);
        let x = Tensor::from_vec(&[2, 8], (0..16).map(|i| i as f64 - 8.0).collect()).unwrap();
        let (y, _) = layer.apply(&x).unwrap();
        assert!(y.data().iter().all(|v| *v == 0.0));
    }

    #[test]
    fn unit_alpha_layer_is_linear() {
        let tree = ClusterTree::balanced(8, 1).unwrap();
        let weight = Hss::random(tree, 1, 5, 1.0).unwrap();
        let layer = HssLinearLayer::new(weight.clone(), true);
        let x = Tensor::from_vec(&[1, 8], (0..8).map(|i| (i as f64).cos()).collect()).unwrap();
        let (y, _) = layer.apply(&x).unwrap();
        let direct = weight.matvec(x.chunk(1, 0)).unwrap();
        assert_eq!(y.data(), direct.as_slice());
    }

    #[test]
    fn matches_dense_oracle() {
        let tree = ClusterTree::balanced(16, 2).unwrap();
        let weight = Hss::random(tree, 2, 17, 1.0).unwrap();
        let dense = weight.to_dense();
        let mut layer = HssLinearLayer::new(weight, true);
        layer.alpha = 0.3;
        let x = Tensor::from_vec(&[3, 16], (0..48).map(|i| ((i * 7) as f64 * 0.13).sin()).collect())
            .unwrap();
        let (y, _) = layer.apply(&x).unwrap();
        for b in 0..3 {
            let pre = dense.matvec(x.chunk(3, b)).unwrap();
            for (i, p) in pre.iter().enumerate() {
                let expect = if *p >= 0.0 { *p } else { 0.3 * p };
                let got = y.chunk(3, b)[i];
                assert!((got - expect).abs() <= 1e-12 * (1.0 + expect.abs()));
            }
        }
    }

    #[test]
    fn zero_adjoint_gives_zero_gradients() {
        let tree = ClusterTree::balanced(8, 1).unwrap();
        let layer = HssLinearLayer::new(Hss::random(tree, 1, 2, 1.0).unwrap(), true);
        let x = Tensor::from_vec(&[2, 8], (0..16).map(|i| 0.1 * i as f64 - 0.7).collect()).unwrap();
        let (_, tape) = layer.apply(&x).unwrap();
        let mut grad = HssLinearLayer::new(Hss::zeros(*layer.weight.tree(), 1).unwrap(), true);
        grad.alpha = 0.0;
        let dy = Tensor::zeros(&[2, 8]);
        let dx = layer.vjp(&tape, &dy, &mut grad).unwrap();
        assert!(dx.data().iter().all(|v| *v == 0.0));
        assert_eq!(grad.alpha, 0.0);
        let mut flat = Vec::new();
        grad.weight.write_flat(&mut flat);
        assert!(flat.iter().all(|v| *v == 0.0));
    }

    #[test]
    fn alpha_gradient_vanishes_for_positive_preactivations() {
        let tree = ClusterTree::balanced(4, 1).unwrap();
        // Identity weight and positive input: every pre-activation positive.
        let layer = HssLinearLayer::new(Hss::identity(tree, 1).unwrap(), true);
        let x = Tensor::from_vec(&[1, 4], vec![0.5, 1.0, 2.0, 3.0]).unwrap();
        let (_, tape) = layer.apply(&x).unwrap();
        let mut grad = HssLinearLayer::new(Hss::zeros(tree, 1).unwrap(), true);
        grad.alpha = 0.0;
        let dy = Tensor::scalar_filled(&[1, 4], 1.0);
        layer.vjp(&tape, &dy, &mut grad).unwrap();
        assert_eq!(grad.alpha, 0.0);
    }
}
