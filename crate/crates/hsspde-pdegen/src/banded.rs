//! General banded matrices with an LU solver (partial pivoting).

use crate::error::{PdegenError, Result};

/// Banded `n x n` matrix with `kl` sub- and `ku` super-diagonals, stored in
/// the usual band layout: entry `(i, j)` lives at band row `kl + ku + i - j`.
/// The extra `kl` top rows hold fill-in produced by row pivoting.
#[derive(Debug, Clone)]
pub struct BandedMatrix {
    n: usize,
    kl: usize,
    ku: usize,
    /// `(2 kl + ku + 1) x n`, row-major.
    ab: Vec<f64>,
}

impl BandedMatrix {
    pub fn new(n: usize, kl: usize, ku: usize) -> Self {
        Self {
            n,
            kl,
            ku,
            ab: vec![0.0; (2 * kl + ku + 1) * n],
        }
    }

    pub fn n(&self) -> usize {
        self.n
    }

    #[inline]
    fn slot(&self, i: usize, j: usize) -> usize {
        debug_assert!(i < self.n && j < self.n);
        let r = self.kl + self.ku + i - j; // i - j in [-ku-kl, kl]
        r * self.n + j
    }

    fn in_band(&self, i: usize, j: usize) -> bool {
        let (i, j) = (i as isize, j as isize);
        j - i <= (self.ku + self.kl) as isize && i - j <= self.kl as isize
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        if self.in_band(i, j) {
            self.ab[self.slot(i, j)]
        } else {
            0.0
        }
    }

    pub fn set(&mut self, i: usize, j: usize, v: f64) {
        // Assembly may only touch the true band; the extra kl rows are
        // reserved for pivot fill.
        let (ii, jj) = (i as isize, j as isize);
        assert!(
            ii - jj <= self.kl as isize && jj - ii <= self.ku as isize,
            "entry ({i},{j}) outside the declared band"
        );
        let s = self.slot(i, j);
        self.ab[s] = v;
    }

    /// `y = A x` over the declared band (including any pivot fill rows, which
    /// are zero before factorization).
    pub fn matvec(&self, x: &[f64]) -> Result<Vec<f64>> {
        if x.len() != self.n {
            return Err(PdegenError::Shape {
                context: format!("banded matvec: expected {}, got {}", self.n, x.len()),
            });
        }
        let mut y = vec![0.0; self.n];
        for i in 0..self.n {
            let lo = i.saturating_sub(self.kl);
            let hi = (i + self.ku + self.kl).min(self.n - 1);
            let mut acc = 0.0;
            for j in lo..=hi {
                acc += self.ab[self.slot(i, j)] * x[j];
            }
            y[i] = acc;
        }
        Ok(y)
    }

    /// LU factorization with partial pivoting; consumes the band.
    pub fn factor(mut self) -> Result<BandedLu> {
        let (n, kl, ku) = (self.n, self.kl, self.ku);
        let width = ku + kl; // upper bandwidth after pivoting
        let mut ipiv = vec![0usize; n];
        for j in 0..n {
            // Pivot among rows j ..= j+kl.
            let last = (j + kl).min(n - 1);
            let mut p = j;
            let mut best = self.ab[self.slot(j, j)].abs();
            for i in (j + 1)..=last {
                let v = self.ab[self.slot(i, j)].abs();
                if v > best {
                    best = v;
                    p = i;
                }
            }
            if best == 0.0 {
                return Err(PdegenError::SingularSystem { column: j });
            }
            ipiv[j] = p;
            if p != j {
                let hi = (j + width).min(n - 1);
                for c in j..=hi {
                    let (a, b) = (self.slot(j, c), self.slot(p, c));
                    self.ab.swap(a, b);
                }
            }
            let pivot = self.ab[self.slot(j, j)];
            for i in (j + 1)..=last {
                let mslot = self.slot(i, j);
                let m = self.ab[mslot] / pivot;
                self.ab[mslot] = m;
                if m != 0.0 {
                    let hi = (j + width).min(n - 1);
                    for c in (j + 1)..=hi {
                        let s = self.slot(j, c);
                        let d = self.slot(i, c);
                        self.ab[d] -= m * self.ab[s];
                    }
                }
            }
        }
        Ok(BandedLu {
            n,
            kl,
            ku,
            ab: self.ab,
            ipiv,
        })
    }

    /// Convenience: factor a copy and solve one right-hand side.
    pub fn solve(&self, rhs: &[f64]) -> Result<Vec<f64>> {
        self.clone().factor()?.solve(rhs)
    }
}

/// Factored form of a [`BandedMatrix`].
#[derive(Debug, Clone)]
pub struct BandedLu {
    n: usize,
    kl: usize,
    ku: usize,
    ab: Vec<f64>,
    ipiv: Vec<usize>,
}

impl BandedLu {
    #[inline]
    fn slot(&self, i: usize, j: usize) -> usize {
        (self.kl + self.ku + i - j) * self.n + j
    }

    pub fn solve(&self, rhs: &[f64]) -> Result<Vec<f64>> {
        if rhs.len() != self.n {
            return Err(PdegenError::Shape {
                context: format!("banded solve: expected {}, got {}", self.n, rhs.len()),
            });
        }
        let mut x = rhs.to_vec();
        // Forward: apply pivots and L.
        for j in 0..self.n {
            let p = self.ipiv[j];
            if p != j {
                x.swap(j, p);
            }
            let last = (j + self.kl).min(self.n - 1);
            for i in (j + 1)..=last {
                let m = self.ab[self.slot(i, j)];
                if m != 0.0 {
                    x[i] -= m * x[j];
                }
            }
        }
        // Backward: solve U x = y with bandwidth ku + kl.
        let width = self.ku + self.kl;
        for j in (0..self.n).rev() {
            let hi = (j + width).min(self.n - 1);
            let mut acc = x[j];
            for c in (j + 1)..=hi {
                acc -= self.ab[self.slot(j, c)] * x[c];
            }
            x[j] = acc / self.ab[self.slot(j, j)];
        }
        Ok(x)
    }
}

/// Thomas algorithm for strictly tridiagonal systems; `diag` is modified
/// copy-free by the caller handing owned buffers. Requires a nonzero pivot
/// at every step (the Burgers Jacobians are strictly diagonally dominant).
pub fn solve_tridiagonal(
    lower: &[f64],
    diag: &[f64],
    upper: &[f64],
    rhs: &[f64],
) -> Result<Vec<f64>> {
    let n = diag.len();
    debug_assert_eq!(lower.len(), n);
    debug_assert_eq!(upper.len(), n);
    debug_assert_eq!(rhs.len(), n);
    let mut c = vec![0.0; n];
    let mut d = vec![0.0; n];
    let mut piv = diag[0];
    if piv == 0.0 {
        return Err(PdegenError::SingularSystem { column: 0 });
    }
    c[0] = upper[0] / piv;
    d[0] = rhs[0] / piv;
    for i in 1..n {
        piv = diag[i] - lower[i] * c[i - 1];
        if piv == 0.0 {
            return Err(PdegenError::SingularSystem { column: i });
        }
        c[i] = upper[i] / piv;
        d[i] = (rhs[i] - lower[i] * d[i - 1]) / piv;
    }
    for i in (0..n - 1).rev() {
        d[i] -= c[i] * d[i + 1];
    }
    Ok(d)
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    /// Dense Gaussian elimination oracle.
    fn dense_solve(a: &[Vec<f64>], b: &[f64]) -> Vec<f64> {
        let n = b.len();
        let mut m: Vec<Vec<f64>> = a.iter().cloned().collect();
        let mut x = b.to_vec();
        for j in 0..n {
            let p = (j..n).max_by(|&r, &s| m[r][j].abs().total_cmp(&m[s][j].abs())).unwrap();
            m.swap(j, p);
            x.swap(j, p);
            for i in j + 1..n {
                let f = m[i][j] / m[j][j];
                for c in j..n {
                    m[i][c] -= f * m[j][c];
                }
                x[i] -= f * x[j];
            }
        }
        for j in (0..n).rev() {
            for c in j + 1..n {
                x[j] -= m[j][c] * x[c];
            }
            x[j] /= m[j][j];
        }
        x
    }

    #[test]
    fn pentadiagonal_solve_matches_dense_oracle() {
        let n = 40;
        let (kl, ku) = (2, 2);
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let mut band = BandedMatrix::new(n, kl, ku);
        let mut dense = vec![vec![0.0; n]; n];
        for i in 0..n {
            for j in i.saturating_sub(kl)..=(i + ku).min(n - 1) {
                let v = rng.random::<f64>() - 0.5 + if i == j { 4.0 } else { 0.0 };
                band.set(i, j, v);
                dense[i][j] = v;
            }
        }
        let rhs: Vec<f64> = (0..n).map(|i| (i as f64 * 0.17).sin()).collect();
        let x = band.solve(&rhs).unwrap();
        let oracle = dense_solve(&dense, &rhs);
        for (a, b) in x.iter().zip(&oracle) {
            assert!((a - b).abs() <= 1e-10 * (1.0 + b.abs()));
        }
        // Residual is at round-off.
        let ax = band.matvec(&x).unwrap();
        let rn: f64 = ax.iter().zip(&rhs).map(|(a, b)| (a - b) * (a - b)).sum::<f64>().sqrt();
        let bn: f64 = rhs.iter().map(|v| v * v).sum::<f64>().sqrt();
        assert!(rn / bn < 1e-12);
    }

    #[test]
    fn pivoting_handles_zero_leading_entry() {
        // First pivot is zero: without row exchange this would divide by 0.
        let mut band = BandedMatrix::new(3, 1, 1);
        band.set(0, 0, 0.0);
        band.set(0, 1, 1.0);
        band.set(1, 0, 2.0);
        band.set(1, 1, 1.0);
        band.set(1, 2, 1.0);
        band.set(2, 1, 1.0);
        band.set(2, 2, 3.0);
        let x = band.solve(&[1.0, 2.0, 3.0]).unwrap();
        let ax = band.matvec(&x).unwrap();
        for (a, b) in ax.iter().zip(&[1.0, 2.0, 3.0]) {
            assert!((a - b).abs() < 1e-12);
        }
    }

    #[test]
    fn singular_band_is_reported() {
        let mut band = BandedMatrix::new(3, 1, 1);
        band.set(0, 0, 1.0);
        // Row 1 and 2 identically zero in column 1 region.
        band.set(1, 1, 0.0);
        band.set(2, 2, 1.0);
        assert!(matches!(
            band.solve(&[1.0, 1.0, 1.0]),
            Err(PdegenError::SingularSystem { .. })
        ));
    }

    #[test]
    fn tridiagonal_thomas_matches_banded() {
        let n = 50;
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        let mut lower = vec![0.0; n];
        let mut diag = vec![0.0; n];
        let mut upper = vec![0.0; n];
        let mut band = BandedMatrix::new(n, 1, 1);
        for i in 0..n {
            diag[i] = 3.0 + rng.random::<f64>();
            band.set(i, i, diag[i]);
            if i > 0 {
                lower[i] = rng.random::<f64>() - 0.5;
                band.set(i, i - 1, lower[i]);
            }
            if i + 1 < n {
                upper[i] = rng.random::<f64>() - 0.5;
                band.set(i, i + 1, upper[i]);
            }
        }
        let rhs: Vec<f64> = (0..n).map(|i| (i as f64).cos()).collect();
        let a = solve_tridiagonal(&lower, &diag, &upper, &rhs).unwrap();
        let b = band.solve(&rhs).unwrap();
        for (x, y) in a.iter().zip(&b) {
            assert!((x - y).abs() <= 1e-11 * (1.0 + y.abs()));
        }
    }
}
