//! One-sided Jacobi SVD.
//!
//! Hestenes' method orthogonalizes the columns of the input by plane
//! rotations. It converges quadratically and, unlike approaches that form the
//! Gram matrix, computes small singular values with high relative accuracy,
//! which the epsilon-rank studies depend on.

use crate::dense::DenseMatrix;
use crate::scalar::{from_f64, Scalar};

const MAX_SWEEPS: usize = 64;

/// Orthogonalizes the columns of `m` in place. Returns the accumulated right
/// rotation matrix when `want_v` is set. Column j of the result has norm
/// sigma_j (unsorted).
fn hestenes<T: Scalar>(m: &mut DenseMatrix<T>, want_v: bool) -> Option<DenseMatrix<T>> {
    let n = m.cols();
    let mut v = want_v.then(|| DenseMatrix::<T>::identity(n));
    let tol = T::epsilon() * from_f64::<T>(4.0);
    for _ in 0..MAX_SWEEPS {
        let mut rotated = false;
        for p in 0..n {
            for q in (p + 1)..n {
                let (mut alpha, mut beta, mut gamma) = (T::zero(), T::zero(), T::zero());
                for i in 0..m.rows() {
                    let up = m[(i, p)];
                    let uq = m[(i, q)];
                    alpha += up * up;
                    beta += uq * uq;
                    gamma += up * uq;
                }
                if gamma == T::zero() || gamma.abs() <= tol * (alpha * beta).sqrt() {
                    continue;
                }
                rotated = true;
                let zeta = (beta - alpha) / (from_f64::<T>(2.0) * gamma);
                let t = {
                    let abs = zeta.abs() + (T::one() + zeta * zeta).sqrt();
                    if zeta >= T::zero() {
                        T::one() / abs
                    } else {
                        -T::one() / abs
                    }
                };
                let c = T::one() / (T::one() + t * t).sqrt();
                let s = c * t;
                for i in 0..m.rows() {
                    let up = m[(i, p)];
                    let uq = m[(i, q)];
                    m[(i, p)] = c * up - s * uq;
                    m[(i, q)] = s * up + c * uq;
                }
                if let Some(v) = v.as_mut() {
                    for i in 0..n {
                        let vp = v[(i, p)];
                        let vq = v[(i, q)];
                        v[(i, p)] = c * vp - s * vq;
                        v[(i, q)] = s * vp + c * vq;
                    }
                }
            }
        }
        if !rotated {
            break;
        }
    }
    v
}

fn column_norms<T: Scalar>(m: &DenseMatrix<T>) -> Vec<T> {
    (0..m.cols())
        .map(|j| {
            (0..m.rows())
                .map(|i| m[(i, j)] * m[(i, j)])
                .sum::<T>()
                .sqrt()
        })
        .collect()
}

/// Descending order of `vals`, ties broken by index for determinism.
fn descending_order<T: Scalar>(vals: &[T]) -> Vec<usize> {
    let mut idx: Vec<usize> = (0..vals.len()).collect();
    idx.sort_by(|&a, &b| {
        vals[b]
            .partial_cmp(&vals[a])
            .unwrap_or(std::cmp::Ordering::Equal)
            .then(a.cmp(&b))
    });
    idx
}

/// Singular values of `b`, descending. Works for any shape.
pub fn singular_values<T: Scalar>(b: &DenseMatrix<T>) -> Vec<T> {
    let mut work = if b.rows() >= b.cols() {
        b.clone()
    } else {
        b.transpose()
    };
    hestenes(&mut work, false);
    let mut sigma = column_norms(&work);
    sigma.sort_by(|a, b| b.partial_cmp(a).unwrap_or(std::cmp::Ordering::Equal));
    sigma
}

/// Flips each basis column so that its entry of largest magnitude is positive.
/// First occurrence wins on ties, which makes the output deterministic.
fn fix_signs<T: Scalar>(basis: &mut DenseMatrix<T>) {
    for j in 0..basis.cols() {
        let mut best = 0usize;
        let mut best_abs = T::zero();
        for i in 0..basis.rows() {
            let a = basis[(i, j)].abs();
            if a > best_abs {
                best_abs = a;
                best = i;
            }
        }
        if basis[(best, j)] < T::zero() {
            for i in 0..basis.rows() {
                let v = basis[(i, j)];
                basis[(i, j)] = -v;
            }
        }
    }
}

/// Orthonormalizes `basis` columns that correspond to (numerically) zero
/// singular values by Gram-Schmidt against the standard basis.
fn complete_basis<T: Scalar>(basis: &mut DenseMatrix<T>, valid: usize) {
    let rows = basis.rows();
    let mut next_seed = 0usize;
    for j in valid..basis.cols() {
        'seed: while next_seed < rows {
            let mut col: Vec<T> = (0..rows)
                .map(|i| if i == next_seed { T::one() } else { T::zero() })
                .collect();
            next_seed += 1;
            for prev in 0..j {
                let dot: T = (0..rows).map(|i| col[i] * basis[(i, prev)]).sum();
                for i in 0..rows {
                    let b = basis[(i, prev)];
                    col[i] = col[i] - dot * b;
                }
            }
            let norm: T = col.iter().map(|x| *x * *x).sum::<T>().sqrt();
            if norm > from_f64::<T>(0.5) {
                for i in 0..rows {
                    basis[(i, j)] = col[i] / norm;
                }
                break 'seed;
            }
        }
    }
}

/// Singular value decomposition restricted to what the compression needs:
/// the top-`r` left singular vectors of `b` (orthonormal, deterministic signs)
/// together with all singular values (descending).
pub fn left_singular_basis<T: Scalar>(b: &DenseMatrix<T>, r: usize) -> (DenseMatrix<T>, Vec<T>) {
    assert!(
        r <= b.rows(),
        "requested {r} left singular vectors from a matrix with {} rows",
        b.rows()
    );
    if b.rows() <= b.cols() {
        // Rotations accumulated while orthogonalizing the columns of b^T are
        // exactly the left singular vectors of b, and they stay orthonormal
        // even when b is rank deficient.
        let mut work = b.transpose();
        let v = hestenes(&mut work, true).expect("rotation accumulation requested");
        let sigma = column_norms(&work);
        let order = descending_order(&sigma);
        let mut basis = DenseMatrix::<T>::from_fn(b.rows(), r, |i, j| v[(i, order[j])]);
        fix_signs(&mut basis);
        let sorted: Vec<T> = order.iter().map(|&k| sigma[k]).collect();
        (basis, sorted)
    } else {
        let mut work = b.clone();
        hestenes(&mut work, false);
        let sigma = column_norms(&work);
        let order = descending_order(&sigma);
        let cutoff = sigma[order[0]] * T::epsilon() * from_f64::<T>(usize::max(b.rows(), 4) as f64);
        let mut valid = 0usize;
        let mut basis = DenseMatrix::<T>::zeros(b.rows(), r);
        for (j, &k) in order.iter().take(r).enumerate() {
            if sigma[k] > cutoff {
                for i in 0..b.rows() {
                    basis[(i, j)] = work[(i, k)] / sigma[k];
                }
                valid = j + 1;
            }
        }
        complete_basis(&mut basis, valid);
        fix_signs(&mut basis);
        let sorted: Vec<T> = order.iter().map(|&k| sigma[k]).collect();
        (basis, sorted)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn mat(rows: usize, cols: usize, f: impl FnMut(usize, usize) -> f64) -> DenseMatrix<f64> {
        DenseMatrix::from_fn(rows, cols, f)
    }

    #[test]
    fn diagonal_singular_values() {
        let d = [4.0, 2.0, 1.0, 0.5];
        let a = mat(4, 4, |i, j| if i == j { d[i] } else { 0.0 });
        let s = singular_values(&a);
        for (got, want) in s.iter().zip(d.iter()) {
            assert!((got - want).abs() < 1e-14);
        }
    }

    #[test]
    fn singular_values_match_frobenius() {
        // sum sigma_i^2 == ||A||_F^2
        let a = mat(5, 9, |i, j| ((i * 7 + j * 3) % 11) as f64 - 5.0);
        let s = singular_values(&a);
        let sum: f64 = s.iter().map(|x| x * x).sum();
        let fro = a.frobenius_norm();
        assert!((sum - fro * fro).abs() <= 1e-10 * fro * fro);
    }

    #[test]
    fn small_values_keep_relative_accuracy() {
        // Diagonal with a huge dynamic range; Gram-based methods would lose
        // the small entries entirely.
        let d = [1.0, 1e-6, 1e-12];
        let a = mat(3, 3, |i, j| if i == j { d[i] } else { 0.0 });
        let s = singular_values(&a);
        for (got, want) in s.iter().zip(d.iter()) {
            assert!((got - want).abs() <= 1e-12 * want);
        }
    }

    #[test]
    fn left_basis_spans_column_space() {
        // Rank-2 wide matrix: basis of size 2 must reproduce B via U U^T B.
        let u1: Vec<f64> = (0..6).map(|i| (i as f64 + 1.0).sin()).collect();
        let u2: Vec<f64> = (0..6).map(|i| (2.3 * i as f64).cos()).collect();
        let b = mat(6, 17, |i, j| {
            u1[i] * (j as f64 + 0.5) + u2[i] * (0.1 * j as f64 - 1.0).powi(2)
        });
        let (basis, sigma) = left_singular_basis(&b, 2);
        assert!(sigma[2] < 1e-10 * sigma[0]);
        let proj = basis.matmul(&basis.matmul_tn(&b).unwrap()).unwrap();
        let err = proj.sub(&b).frobenius_norm() / b.frobenius_norm();
        assert!(err < 1e-12, "projection error {err}");
    }

    #[test]
    fn basis_is_orthonormal_even_for_zero_matrix() {
        let b = DenseMatrix::<f64>::zeros(4, 8);
        let (basis, _) = left_singular_basis(&b, 3);
        let gram = basis.matmul_tn(&basis).unwrap();
        for i in 0..3 {
            for j in 0..3 {
                let want = if i == j { 1.0 } else { 0.0 };
                assert!((gram[(i, j)] - want).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn deterministic_signs() {
        let b = mat(3, 5, |i, j| ((i + 2 * j) as f64).sin());
        let (u1, _) = left_singular_basis(&b, 3);
        let (u2, _) = left_singular_basis(&b.clone(), 3);
        assert_eq!(u1, u2);
        // Largest-magnitude entry of every column is positive.
        for j in 0..3 {
            let mut best = (0usize, 0.0f64);
            for i in 0..3 {
                if u1[(i, j)].abs() > best.1 {
                    best = (i, u1[(i, j)].abs());
                }
            }
            assert!(u1[(best.0, j)] > 0.0);
        }
    }
}
