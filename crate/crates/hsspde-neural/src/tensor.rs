//! Dense row-major tensors of arbitrary rank, double precision.

use crate::error::{NeuralError, Result};
use hsspde_core::Mat;

/// Row-major tensor. The first axis is the batch axis by convention of the
/// layers, but nothing in here assumes it.
#[derive(Debug, Clone, PartialEq)]
pub struct Tensor {
    shape: Vec<usize>,
    data: Vec<f64>,
}

impl Tensor {
    pub fn zeros(shape: &[usize]) -> Self {
        let len = shape.iter().product();
        Self {
            shape: shape.to_vec(),
            data: vec![0.0; len],
        }
    }

    pub fn from_vec(shape: &[usize], data: Vec<f64>) -> Result<Self> {
        let len: usize = shape.iter().product();
        if data.len() != len {
            return Err(NeuralError::LengthMismatch {
                context: "tensor entries",
                expected: len,
                actual: data.len(),
            });
        }
        Ok(Self {
            shape: shape.to_vec(),
            data,
        })
    }

    pub fn scalar_filled(shape: &[usize], value: f64) -> Self {
        let len = shape.iter().product();
        Self {
            shape: shape.to_vec(),
            data: vec![value; len],
        }
    }

    pub fn shape(&self) -> &[usize] {
        &self.shape
    }

    pub fn ndim(&self) -> usize {
        self.shape.len()
    }

    pub fn len(&self) -> usize {
        self.data.len()
    }

    pub fn is_empty(&self) -> bool {
        self.data.is_empty()
    }

    pub fn data(&self) -> &[f64] {
        &self.data
    }

    pub fn data_mut(&mut self) -> &mut [f64] {
        &mut self.data
    }

    pub fn into_data(self) -> Vec<f64> {
        self.data
    }

    pub fn all_finite(&self) -> bool {
        self.data.iter().all(|v| v.is_finite())
    }

    /// Reinterprets the tensor with a new shape of equal length.
    pub fn reshaped(&self, shape: &[usize]) -> Result<Self> {
        Self::from_vec(shape, self.data.clone())
    }

    /// Number of leading "rows" when the trailing `trailing` axes are viewed
    /// as the per-sample shape.
    pub fn leading_count(&self, trailing: usize) -> Result<usize> {
        if trailing > self.ndim() {
            return Err(NeuralError::ShapeMismatch {
                context: "leading/trailing split",
                expected: vec![trailing],
                actual: self.shape.clone(),
            });
        }
        Ok(self.shape[..self.ndim() - trailing].iter().product())
    }

    /// Slice of the `i`-th chunk when the data is viewed as `count` equal
    /// contiguous chunks.
    pub fn chunk(&self, count: usize, i: usize) -> &[f64] {
        let size = self.data.len() / count;
        &self.data[i * size..(i + 1) * size]
    }

    pub fn chunk_mut(&mut self, count: usize, i: usize) -> &mut [f64] {
        let size = self.data.len() / count;
        &mut self.data[i * size..(i + 1) * size]
    }

    pub fn add_assign(&mut self, other: &Self) {
        debug_assert_eq!(self.shape, other.shape);
        for (a, b) in self.data.iter_mut().zip(&other.data) {
            *a += *b;
        }
    }

    pub fn axpy(&mut self, a: f64, other: &Self) {
        debug_assert_eq!(self.shape, other.shape);
        for (x, y) in self.data.iter_mut().zip(&other.data) {
            *x += a * *y;
        }
    }

    pub fn scale(&mut self, s: f64) {
        for v in &mut self.data {
            *v *= s;
        }
    }

    pub fn norm2(&self) -> f64 {
        self.data.iter().map(|v| v * v).sum::<f64>().sqrt()
    }

    /// Splits the axes around `axis`: product of the axes before it, the
    /// extent of the axis, and the product of the axes after it.
    pub fn axis_split(&self, axis: usize) -> Result<(usize, usize, usize)> {
        if axis >= self.ndim() {
            return Err(NeuralError::BadMode {
                mode: axis,
                rank: self.ndim(),
            });
        }
        let outer: usize = self.shape[..axis].iter().product();
        let inner: usize = self.shape[axis + 1..].iter().product();
        Ok((outer, self.shape[axis], inner))
    }
}

/// Modal product along `axis`: contracts the tensor's `axis` extent with the
/// columns of `w`, replacing that extent by `w.rows()`:
/// `out[..., a, ...] = sum_j w[a, j] * z[..., j, ...]`.
pub fn modal_product(z: &Tensor, w: &Mat, axis: usize) -> Result<Tensor> {
    let (outer, d, inner) = z.axis_split(axis)?;
    if w.cols() != d {
        return Err(NeuralError::ShapeMismatch {
            context: "modal product",
            expected: vec![w.rows(), d],
            actual: vec![w.rows(), w.cols()],
        });
    }
    let mut shape = z.shape().to_vec();
    shape[axis] = w.rows();
    let mut out = Tensor::zeros(&shape);
    let zd = z.data();
    let od = out.data_mut();
    for o in 0..outer {
        let zbase = o * d * inner;
        let obase = o * w.rows() * inner;
        for j in 0..d {
            let zrow = &zd[zbase + j * inner..zbase + (j + 1) * inner];
            for a in 0..w.rows() {
                let coeff = w[(a, j)];
                if coeff == 0.0 {
                    continue;
                }
                let orow = &mut od[obase + a * inner..obase + (a + 1) * inner];
                for (dst, src) in orow.iter_mut().zip(zrow) {
                    *dst += coeff * src;
                }
            }
        }
    }
    Ok(out)
}

/// Visits every fiber along `axis`: `gather` copies a fiber into a scratch
/// buffer, `scatter` writes one back.
pub fn gather_fiber(z: &Tensor, axis_split: (usize, usize, usize), o: usize, i: usize, buf: &mut [f64]) {
    let (_, d, inner) = axis_split;
    let base = o * d * inner + i;
    let data = z.data();
    for (j, slot) in buf.iter_mut().enumerate() {
        *slot = data[base + j * inner];
    }
}

pub fn scatter_fiber(z: &mut Tensor, axis_split: (usize, usize, usize), o: usize, i: usize, buf: &[f64]) {
    let (_, d, inner) = axis_split;
    let base = o * d * inner + i;
    let data = z.data_mut();
    for (j, slot) in buf.iter().enumerate() {
        data[base + j * inner] = *slot;
    }
}
