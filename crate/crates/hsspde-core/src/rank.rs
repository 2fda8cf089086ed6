//! Numerical epsilon-rank.

use crate::dense::DenseMatrix;
use crate::scalar::Scalar;
use crate::svd::singular_values;

/// Smallest `k` such that the Frobenius norm of the trailing singular values
/// `sigma_{k+1}, sigma_{k+2}, ...` is at most `eps`.
///
/// The zero matrix has epsilon-rank 0 for every positive tolerance.
pub fn epsilon_rank<T: Scalar>(b: &DenseMatrix<T>, eps: T) -> usize {
    assert!(eps > T::zero(), "tolerance must be positive");
    let sigma = singular_values(b);
    // tail2[k] = sum_{i >= k} sigma_i^2, accumulated smallest-first.
    let mut tail2 = vec![T::zero(); sigma.len() + 1];
    for k in (0..sigma.len()).rev() {
        tail2[k] = tail2[k + 1] + sigma[k] * sigma[k];
    }
    let eps2 = eps * eps;
    (0..=sigma.len())
        .find(|&k| tail2[k] <= eps2)
        .unwrap_or(sigma.len())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn zero_matrix_has_rank_zero() {
        let z = DenseMatrix::<f64>::zeros(5, 7);
        assert_eq!(epsilon_rank(&z, 1e-3), 0);
    }

    #[test]
    fn rank_one_matrix() {
        let b = DenseMatrix::from_fn(4, 4, |i, j| ((i + 1) * (j + 2)) as f64);
        assert_eq!(epsilon_rank(&b, 1e-8), 1);
    }

    #[test]
    fn diagonal_tail_sum() {
        // sigma = (4, 2, 1, 0.5, 0.25, 0.125, 0.0625, 0.03125)
        let d: Vec<f64> = (0..8).map(|i| 4.0 / (1u32 << i) as f64).collect();
        let b = DenseMatrix::from_fn(8, 8, |i, j| if i == j { d[i] } else { 0.0 });
        // Expected rank: smallest k with sqrt(sum_{i>k} sigma_i^2) <= 1.2,
        // computed by the direct tail sum below.
        let mut expect = 8;
        for k in 0..=8 {
            let tail: f64 = d[k..].iter().map(|x| x * x).sum::<f64>().sqrt();
            if tail <= 1.2 {
                expect = k;
                break;
            }
        }
        assert_eq!(epsilon_rank(&b, 1.2), expect);
        assert_eq!(expect, 2);
    }

    #[test]
    fn huge_eps_gives_zero() {
        let b = DenseMatrix::from_fn(3, 3, |i, j| (i + j) as f64 * 1e-3);
        assert_eq!(epsilon_rank(&b, 1e3), 0);
    }
}
