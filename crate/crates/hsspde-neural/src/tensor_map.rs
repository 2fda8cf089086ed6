//! Linear tensor maps for lifting and projection, in a dense variant (full
//! coefficient tensor) and a CP low-rank variant that contracts separable
//! terms without ever materializing the coefficient tensor.

use crate::error::{NeuralError, Result};
use crate::tensor::Tensor;
use hsspde_core::Mat;

/// Linear map between tensor spaces: `out[a] = sum_b W[a, b] * in[b]` over
/// multi-indices. The CP variant stores `rank` separable terms
/// `c_i * (out factors) x (in factors)`, exactly
/// `rank * (1 + sum out dims + sum in dims)` scalars.
#[derive(Debug, Clone)]
pub enum LinearTensorMap {
    Dense {
        in_shape: Vec<usize>,
        out_shape: Vec<usize>,
        /// `(prod out_shape) x (prod in_shape)` coefficients.
        weight: Mat,
    },
    Cp {
        in_shape: Vec<usize>,
        out_shape: Vec<usize>,
        coeffs: Vec<f64>,
        /// `out_factors[i][j]` has length `out_shape[j]`.
        out_factors: Vec<Vec<Vec<f64>>>,
        /// `in_factors[i][j]` has length `in_shape[j]`.
        in_factors: Vec<Vec<Vec<f64>>>,
    },
}

/// Forward tape: the input and, for the CP variant, the per-sample inner
/// products `s[b][i] = <term i in-factors, Z_b>`.
#[derive(Debug)]
pub struct TensorMapTape {
    input: Tensor,
    s: Vec<Vec<f64>>,
}

/// Contraction of a full multi-index tensor `z` (shape `shape`) with one
/// vector per mode.
fn contract_all(z: &[f64], shape: &[usize], vecs: &[Vec<f64>]) -> f64 {
    // Sequentially contract the last axis; `cur` shrinks mode by mode.
    let mut cur = z.to_vec();
    for (axis, v) in vecs.iter().enumerate().rev() {
        let d = shape[axis];
        let rows = cur.len() / d;
        let mut next = vec![0.0; rows];
        for r in 0..rows {
            let mut acc = 0.0;
            for j in 0..d {
                acc += cur[r * d + j] * v[j];
            }
            next[r] = acc;
        }
        cur = next;
    }
    cur[0]
}

/// Gradient of [`contract_all`] with respect to the vector of mode `skip`:
/// contracts every other mode, leaving a vector of length `shape[skip]`.
fn contract_except(z: &[f64], shape: &[usize], vecs: &[Vec<f64>], skip: usize) -> Vec<f64> {
    let mut out = vec![0.0; shape[skip]];
    let inner: usize = shape[skip + 1..].iter().product();
    let outer: usize = shape[..skip].iter().product();
    // Direct sum over all multi-indices; lift/project shapes are small.
    for o in 0..outer {
        let mut wo = 1.0;
        let mut rem = o;
        for (axis, dim) in shape[..skip].iter().enumerate().rev() {
            let idx = rem % dim;
            rem /= dim;
            wo *= vecs[axis][idx];
        }
        for k in 0..shape[skip] {
            let base = (o * shape[skip] + k) * inner;
            let mut acc = 0.0;
            for i in 0..inner {
                let mut wi = 1.0;
                let mut rem = i;
                for (off, dim) in shape[skip + 1..].iter().enumerate().rev() {
                    let idx = rem % dim;
                    rem /= dim;
                    wi *= vecs[skip + 1 + off][idx];
                }
                acc += z[base + i] * wi;
            }
            out[k] += wo * acc;
        }
    }
    out
}

/// `out += scale * (x)_j vecs[j]` outer product over all modes.
fn outer_accumulate(out: &mut [f64], shape: &[usize], vecs: &[Vec<f64>], scale: f64) {
    for (flat, slot) in out.iter_mut().enumerate() {
        let mut w = scale;
        let mut rem = flat;
        for (axis, dim) in shape.iter().enumerate().rev() {
            let idx = rem % dim;
            rem /= dim;
            w *= vecs[axis][idx];
        }
        *slot += w;
    }
}

impl LinearTensorMap {
    pub fn in_shape(&self) -> &[usize] {
        match self {
            Self::Dense { in_shape, .. } | Self::Cp { in_shape, .. } => in_shape,
        }
    }

    pub fn out_shape(&self) -> &[usize] {
        match self {
            Self::Dense { out_shape, .. } | Self::Cp { out_shape, .. } => out_shape,
        }
    }

    pub fn param_count(&self) -> usize {
        match self {
            Self::Dense { weight, .. } => weight.rows() * weight.cols(),
            Self::Cp {
                in_shape,
                out_shape,
                coeffs,
                ..
            } => {
                coeffs.len()
                    * (1 + out_shape.iter().sum::<usize>() + in_shape.iter().sum::<usize>())
            }
        }
    }

    /// Expands the map into its full coefficient matrix
    /// `(prod out) x (prod in)`; used as the oracle for the CP variant.
    pub fn to_dense_matrix(&self) -> Mat {
        match self {
            Self::Dense { weight, .. } => weight.clone(),
            Self::Cp {
                in_shape,
                out_shape,
                coeffs,
                out_factors,
                in_factors,
            } => {
                let rows: usize = out_shape.iter().product();
                let cols: usize = in_shape.iter().product();
                let mut w = Mat::zeros(rows, cols);
                for i in 0..coeffs.len() {
                    let mut row_part = vec![0.0; rows];
                    outer_accumulate(&mut row_part, out_shape, &out_factors[i], 1.0);
                    let mut col_part = vec![0.0; cols];
                    outer_accumulate(&mut col_part, in_shape, &in_factors[i], 1.0);
                    for (r, rp) in row_part.iter().enumerate() {
                        for (c, cp) in col_part.iter().enumerate() {
                            w[(r, c)] += coeffs[i] * rp * cp;
                        }
                    }
                }
                w
            }
        }
    }

    fn check_input(&self, x: &Tensor) -> Result<usize> {
        let m = self.in_shape().len();
        if x.ndim() < m || x.shape()[x.ndim() - m..] != *self.in_shape() {
            return Err(NeuralError::ShapeMismatch {
                context: "tensor map input",
                expected: self.in_shape().to_vec(),
                actual: x.shape().to_vec(),
            });
        }
        x.leading_count(m)
    }

    pub fn apply(&self, x: &Tensor) -> Result<(Tensor, TensorMapTape)> {
        let batch = self.check_input(x)?;
        let m = self.in_shape().len();
        let mut shape = x.shape()[..x.ndim() - m].to_vec();
        shape.extend_from_slice(self.out_shape());
        let mut out = Tensor::zeros(&shape);
        let mut s_all = Vec::new();
        match self {
            Self::Dense { weight, .. } => {
                for b in 0..batch {
                    let y = weight.matvec(x.chunk(batch, b))?;
                    out.chunk_mut(batch, b).copy_from_slice(&y);
                }
            }
            Self::Cp {
                in_shape,
                out_shape,
                coeffs,
                out_factors,
                in_factors,
            } => {
                for b in 0..batch {
                    let zb = x.chunk(batch, b);
                    let mut s = Vec::with_capacity(coeffs.len());
                    for i in 0..coeffs.len() {
                        s.push(contract_all(zb, in_shape, &in_factors[i]));
                    }
                    let ob = out.chunk_mut(batch, b);
                    for i in 0..coeffs.len() {
                        outer_accumulate(ob, out_shape, &out_factors[i], coeffs[i] * s[i]);
                    }
                    s_all.push(s);
                }
            }
        }
        Ok((
            out,
            TensorMapTape {
                input: x.clone(),
                s: s_all,
            },
        ))
    }

    /// Reverse pass; accumulates parameter gradients into `grad` (which must
    /// be the same variant and shape) and returns `dZ`.
    pub fn vjp(&self, tape: &TensorMapTape, dy: &Tensor, grad: &mut Self) -> Result<Tensor> {
        let batch = self.check_input(&tape.input)?;
        let mut dx = Tensor::zeros(tape.input.shape());
        match (self, grad) {
            (Self::Dense { weight, .. }, Self::Dense { weight: gw, .. }) => {
                for b in 0..batch {
                    let g = dy.chunk(batch, b);
                    let xb = tape.input.chunk(batch, b);
                    for i in 0..weight.rows() {
                        let gi = g[i];
                        if gi != 0.0 {
                            for (j, xj) in xb.iter().enumerate() {
                                gw[(i, j)] += gi * xj;
                            }
                        }
                    }
                    let dxb = weight.matvec_transpose(g)?;
                    dx.chunk_mut(batch, b).copy_from_slice(&dxb);
                }
            }
            (
                Self::Cp {
                    in_shape,
                    out_shape,
                    coeffs,
                    out_factors,
                    in_factors,
                },
                Self::Cp {
                    coeffs: gc,
                    out_factors: gu,
                    in_factors: gv,
                    ..
                },
            ) => {
                for b in 0..batch {
                    let g = dy.chunk(batch, b);
                    let zb = tape.input.chunk(batch, b);
                    let s = &tape.s[b];
                    for i in 0..coeffs.len() {
                        let t = contract_all(g, out_shape, &out_factors[i]);
                        gc[i] += s[i] * t;
                        for j in 0..out_shape.len() {
                            let part = contract_except(g, out_shape, &out_factors[i], j);
                            for (slot, p) in gu[i][j].iter_mut().zip(&part) {
                                *slot += coeffs[i] * s[i] * p;
                            }
                        }
                        for j in 0..in_shape.len() {
                            let part = contract_except(zb, in_shape, &in_factors[i], j);
                            for (slot, p) in gv[i][j].iter_mut().zip(&part) {
                                *slot += coeffs[i] * t * p;
                            }
                        }
                        outer_accumulate(
                            dx.chunk_mut(batch, b),
                            in_shape,
                            &in_factors[i],
                            coeffs[i] * t,
                        );
                    }
                }
            }
            _ => {
                return Err(NeuralError::StaleTape {
                    recorded: 0,
                    needed: 1,
                })
            }
        }
        Ok(dx)
    }
}
