//! Row-major dense matrices and the handful of kernels the HSS code needs.

use crate::scalar::Scalar;
use crate::{CoreError, Result};
use std::ops::Range;

/// Dense row-major matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct DenseMatrix<T> {
    rows: usize,
    cols: usize,
    data: Vec<T>,
}

impl<T: Scalar> DenseMatrix<T> {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        Self {
            rows,
            cols,
            data: vec![T::zero(); rows * cols],
        }
    }

    pub fn identity(n: usize) -> Self {
        let mut m = Self::zeros(n, n);
        for i in 0..n {
            m[(i, i)] = T::one();
        }
        m
    }

    pub fn from_vec(rows: usize, cols: usize, data: Vec<T>) -> Result<Self> {
        if data.len() != rows * cols {
            return Err(CoreError::LengthMismatch {
                context: "dense matrix entries",
                expected: rows * cols,
                actual: data.len(),
            });
        }
        Ok(Self { rows, cols, data })
    }

    /// Builds a matrix from an entry function.
    pub fn from_fn(rows: usize, cols: usize, mut f: impl FnMut(usize, usize) -> T) -> Self {
        let mut data = Vec::with_capacity(rows * cols);
        for i in 0..rows {
            for j in 0..cols {
                data.push(f(i, j));
            }
        }
        Self { rows, cols, data }
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn data(&self) -> &[T] {
        &self.data
    }

    pub fn data_mut(&mut self) -> &mut [T] {
        &mut self.data
    }

    pub fn row(&self, i: usize) -> &[T] {
        &self.data[i * self.cols..(i + 1) * self.cols]
    }

    pub fn is_square(&self) -> bool {
        self.rows == self.cols
    }

    pub fn transpose(&self) -> Self {
        Self::from_fn(self.cols, self.rows, |i, j| self[(j, i)])
    }

    /// `y = A x`.
    pub fn matvec(&self, x: &[T]) -> Result<Vec<T>> {
        if x.len() != self.cols {
            return Err(CoreError::LengthMismatch {
                context: "matvec input",
                expected: self.cols,
                actual: x.len(),
            });
        }
        let mut y = vec![T::zero(); self.rows];
        for i in 0..self.rows {
            let row = self.row(i);
            let mut acc = T::zero();
            for (a, b) in row.iter().zip(x) {
                acc += *a * *b;
            }
            y[i] = acc;
        }
        Ok(y)
    }

    /// `y = A^T x`.
    pub fn matvec_transpose(&self, x: &[T]) -> Result<Vec<T>> {
        if x.len() != self.rows {
            return Err(CoreError::LengthMismatch {
                context: "transposed matvec input",
                expected: self.rows,
                actual: x.len(),
            });
        }
        let mut y = vec![T::zero(); self.cols];
        for i in 0..self.rows {
            let xi = x[i];
            for (yj, a) in y.iter_mut().zip(self.row(i)) {
                *yj += *a * xi;
            }
        }
        Ok(y)
    }

    /// `C = A B`.
    pub fn matmul(&self, other: &Self) -> Result<Self> {
        if self.cols != other.rows {
            return Err(CoreError::ShapeMismatch {
                context: "matmul",
                expected_rows: self.cols,
                expected_cols: other.cols,
                rows: other.rows,
                cols: other.cols,
            });
        }
        let mut out = Self::zeros(self.rows, other.cols);
        for i in 0..self.rows {
            for k in 0..self.cols {
                let aik = self[(i, k)];
                if aik == T::zero() {
                    continue;
                }
                let orow = other.row(k);
                let dst = &mut out.data[i * out.cols..(i + 1) * out.cols];
                for (d, b) in dst.iter_mut().zip(orow) {
                    *d += aik * *b;
                }
            }
        }
        Ok(out)
    }

    /// `C = A^T B`.
    pub fn matmul_tn(&self, other: &Self) -> Result<Self> {
        if self.rows != other.rows {
            return Err(CoreError::ShapeMismatch {
                context: "matmul_tn",
                expected_rows: self.rows,
                expected_cols: other.cols,
                rows: other.rows,
                cols: other.cols,
            });
        }
        let mut out = Self::zeros(self.cols, other.cols);
        for k in 0..self.rows {
            let arow = self.row(k);
            let brow = other.row(k);
            for i in 0..self.cols {
                let aki = arow[i];
                if aki == T::zero() {
                    continue;
                }
                let dst = &mut out.data[i * out.cols..(i + 1) * out.cols];
                for (d, b) in dst.iter_mut().zip(brow) {
                    *d += aki * *b;
                }
            }
        }
        Ok(out)
    }

    /// Copy of the sub-block `rows x cols`.
    pub fn block(&self, rows: Range<usize>, cols: Range<usize>) -> Self {
        Self::from_fn(rows.len(), cols.len(), |i, j| {
            self[(rows.start + i, cols.start + j)]
        })
    }

    /// Copy of the rows `rows` restricted to the complement of `cols`.
    pub fn block_excluding_cols(&self, rows: Range<usize>, cols: Range<usize>) -> Self {
        let kept = self.cols - cols.len();
        Self::from_fn(rows.len(), kept, |i, j| {
            let c = if j < cols.start { j } else { j + cols.len() };
            self[(rows.start + i, c)]
        })
    }

    /// Writes `block` into `self` at the given offset.
    pub fn set_block(&mut self, row0: usize, col0: usize, block: &Self) {
        for i in 0..block.rows {
            for j in 0..block.cols {
                self[(row0 + i, col0 + j)] = block[(i, j)];
            }
        }
    }

    pub fn add_assign(&mut self, other: &Self) {
        debug_assert_eq!(self.rows, other.rows);
        debug_assert_eq!(self.cols, other.cols);
        for (a, b) in self.data.iter_mut().zip(&other.data) {
            *a += *b;
        }
    }

    pub fn sub(&self, other: &Self) -> Self {
        debug_assert_eq!(self.rows, other.rows);
        let mut out = self.clone();
        for (a, b) in out.data.iter_mut().zip(&other.data) {
            *a -= *b;
        }
        out
    }

    pub fn scale(&mut self, s: T) {
        for a in &mut self.data {
            *a *= s;
        }
    }

    pub fn frobenius_norm(&self) -> T {
        self.data.iter().map(|a| *a * *a).sum::<T>().sqrt()
    }

    pub fn all_finite(&self) -> bool {
        self.data.iter().all(|a| a.is_finite())
    }
}

impl<T: Scalar> std::ops::Index<(usize, usize)> for DenseMatrix<T> {
    type Output = T;

    #[inline]
    fn index(&self, (i, j): (usize, usize)) -> &T {
        debug_assert!(i < self.rows && j < self.cols);
        &self.data[i * self.cols + j]
    }
}

impl<T: Scalar> std::ops::IndexMut<(usize, usize)> for DenseMatrix<T> {
    #[inline]
    fn index_mut(&mut self, (i, j): (usize, usize)) -> &mut T {
        debug_assert!(i < self.rows && j < self.cols);
        &mut self.data[i * self.cols + j]
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn matvec_and_transpose_agree_with_matmul() {
        let a = DenseMatrix::from_fn(3, 4, |i, j| (i * 4 + j) as f64);
        let x = vec![1.0, -1.0, 2.0, 0.5];
        let y = a.matvec(&x).unwrap();
        for i in 0..3 {
            let manual: f64 = (0..4).map(|j| a[(i, j)] * x[j]).sum();
            assert_eq!(y[i], manual);
        }
        let at = a.transpose();
        let z = vec![1.0, 2.0, 3.0];
        assert_eq!(a.matvec_transpose(&z).unwrap(), at.matvec(&z).unwrap());
    }

    #[test]
    fn block_excluding_cols_skips_range() {
        let a = DenseMatrix::from_fn(4, 4, |i, j| (10 * i + j) as f64);
        let b = a.block_excluding_cols(1..3, 1..3);
        assert_eq!(b.rows(), 2);
        assert_eq!(b.cols(), 2);
        assert_eq!(b[(0, 0)], 10.0);
        assert_eq!(b[(0, 1)], 13.0);
        assert_eq!(b[(1, 0)], 20.0);
        assert_eq!(b[(1, 1)], 23.0);
    }

    #[test]
    fn shape_errors() {
        let a = DenseMatrix::<f64>::zeros(2, 3);
        assert!(a.matvec(&[1.0, 2.0]).is_err());
        assert!(DenseMatrix::from_vec(2, 2, vec![0.0f64; 3]).is_err());
    }

    #[test]
    fn works_in_single_precision() {
        let a = DenseMatrix::<f32>::identity(3);
        let y = a.matvec(&[1.0f32, 2.0, 3.0]).unwrap();
        assert_eq!(y, vec![1.0f32, 2.0, 3.0]);
    }
}
