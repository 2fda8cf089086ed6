//! m-dimensional HSS layer: a sum of `r_out` separable terms, each applying
//! one HSS factor per spatial mode through modal products.

use crate::activation::{leaky_relu, leaky_relu_vjp};
use crate::error::{NeuralError, Result};
use crate::tensor::{gather_fiber, scatter_fiber, Tensor};
use hsspde_core::Hss;

/// Layer acting on tensors with `m = dims.len()` trailing spatial modes.
/// Factor `factors[k][j]` is the HSS operator applied along mode `j` in the
/// `k`-th separable term; the outputs of the `r_out` terms are summed and the
/// activation applied elementwise.
#[derive(Debug, Clone)]
pub struct NdHssLayer {
    pub dims: Vec<usize>,
    pub factors: Vec<Vec<Hss>>,
    pub alpha: f64,
    pub use_activation: bool,
}

/// Inputs of every modal product in the forward pass (`inters[k][j]` feeds
/// factor `j` of term `k`), plus the pre-activation sum. The per-fiber matvec
/// traces are recomputed during the reverse pass instead of being stored.
#[derive(Debug)]
pub struct NdHssTape {
    inters: Vec<Vec<Tensor>>,
    pre: Tensor,
}

impl NdHssLayer {
    pub fn new(factors: Vec<Vec<Hss>>, use_activation: bool) -> Result<Self> {
        assert!(!factors.is_empty(), "outer rank must be at least 1");
        let dims: Vec<usize> = factors[0].iter().map(|h| h.dim()).collect();
        for term in &factors {
            if term.len() != dims.len() {
                return Err(NeuralError::ShapeMismatch {
                    context: "nd layer factors",
                    expected: vec![dims.len()],
                    actual: vec![term.len()],
                });
            }
            for (j, h) in term.iter().enumerate() {
                if h.dim() != dims[j] {
                    return Err(NeuralError::ShapeMismatch {
                        context: "nd layer factor extent",
                        expected: vec![dims[j]],
                        actual: vec![h.dim()],
                    });
                }
            }
        }
        Ok(Self {
            dims,
            factors,
            alpha: 1.0,
            use_activation,
        })
    }

    pub fn modes(&self) -> usize {
        self.dims.len()
    }

    pub fn outer_rank(&self) -> usize {
        self.factors.len()
    }

    fn check_input(&self, x: &Tensor) -> Result<usize> {
        let m = self.modes();
        if x.ndim() < m || x.shape()[x.ndim() - m..] != self.dims[..] {
            return Err(NeuralError::ShapeMismatch {
                context: "nd layer input",
                expected: self.dims.clone(),
                actual: x.shape().to_vec(),
            });
        }
        Ok(x.ndim() - m)
    }

    pub fn apply(&self, x: &Tensor) -> Result<(Tensor, NdHssTape)> {
        let lead = self.check_input(x)?;
        let mut pre = Tensor::zeros(x.shape());
        let mut inters = Vec::with_capacity(self.outer_rank());
        for (k, term) in self.factors.iter().enumerate() {
            let mut stack = Vec::with_capacity(self.modes());
            let mut cur = x.clone();
            for (j, factor) in term.iter().enumerate() {
                let next = modal_apply_hss(&cur, factor, lead + j)?;
                stack.push(cur);
                cur = next;
            }
            if k == 0 {
                pre = cur;
            } else {
                pre.add_assign(&cur);
            }
            inters.push(stack);
        }
        let out = if self.use_activation {
            leaky_relu(&pre, self.alpha)
        } else {
            pre.clone()
        };
        Ok((out, NdHssTape { inters, pre }))
    }

    /// Exact adjoint. Accumulates factor gradients into `grad.factors` and
    /// the slope gradient into `grad.alpha`, returns `dZ`.
    pub fn vjp(&self, tape: &NdHssTape, dy: &Tensor, grad: &mut Self) -> Result<Tensor> {
        if tape.inters.len() != self.outer_rank() {
            return Err(NeuralError::StaleTape {
                recorded: tape.inters.len(),
                needed: self.outer_rank(),
            });
        }
        if dy.shape() != tape.pre.shape() {
            return Err(NeuralError::ShapeMismatch {
                context: "nd layer adjoint",
                expected: tape.pre.shape().to_vec(),
                actual: dy.shape().to_vec(),
            });
        }
        let lead = self.check_input(dy)?;
        let dpre = if self.use_activation {
            let (dpre, dalpha) = leaky_relu_vjp(&tape.pre, self.alpha, dy);
            grad.alpha += dalpha;
            dpre
        } else {
            dy.clone()
        };
        let mut dx = Tensor::zeros(dy.shape());
        for (k, term) in self.factors.iter().enumerate() {
            let mut g = dpre.clone();
            for j in (0..term.len()).rev() {
                g = modal_vjp_hss(
                    &tape.inters[k][j],
                    &term[j],
                    lead + j,
                    &g,
                    &mut grad.factors[k][j],
                )?;
            }
            dx.add_assign(&g);
        }
        Ok(dx)
    }
}

/// Modal product along `axis` where the matrix is an HSS operator applied by
/// batched structured matvec on every fiber; the operator is never densified.
pub fn modal_apply_hss(z: &Tensor, h: &Hss, axis: usize) -> Result<Tensor> {
    let split = z.axis_split(axis)?;
    let (outer, d, inner) = split;
    if h.dim() != d {
        return Err(NeuralError::ShapeMismatch {
            context: "hss modal product",
            expected: vec![h.dim()],
            actual: vec![d],
        });
    }
    let mut out = Tensor::zeros(z.shape());
    let mut buf = vec![0.0; d];
    for o in 0..outer {
        for i in 0..inner {
            gather_fiber(z, split, o, i, &mut buf);
            let y = h.matvec(&buf)?;
            scatter_fiber(&mut out, split, o, i, &y);
        }
    }
    Ok(out)
}

/// Adjoint of [`modal_apply_hss`] at input `z`: recomputes each fiber's trace,
/// pushes the fiber of `g` through the matvec adjoint, and accumulates the
/// generator gradients into `grad`.
fn modal_vjp_hss(z: &Tensor, h: &Hss, axis: usize, g: &Tensor, grad: &mut Hss) -> Result<Tensor> {
    let split = z.axis_split(axis)?;
    let (outer, d, inner) = split;
    let mut out = Tensor::zeros(z.shape());
    let mut buf = vec![0.0; d];
    let mut gbuf = vec![0.0; d];
    for o in 0..outer {
        for i in 0..inner {
            gather_fiber(z, split, o, i, &mut buf);
            gather_fiber(g, split, o, i, &mut gbuf);
            let (_, trace) = h.matvec_recording(&buf)?;
            let dxf = h.matvec_vjp(&trace, &gbuf, grad)?;
            scatter_fiber(&mut out, split, o, i, &dxf);
        }
    }
    Ok(out)
}
