//! 2D Poisson data: -Lap(u) = f on the unit square, homogeneous Dirichlet,
//! fourth-order nine-point (Mehrstellen) stencil, solved directly by
//! diagonalization in the discrete sine basis.

use crate::dataset::{downsample, Dataset, DatasetMeta, GridMeta, GENERATOR_VERSION};
use crate::error::Result;
use hsspde_core::seed;
use hsspde_neural::Tensor;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use std::collections::BTreeMap;
use std::f64::consts::PI;

pub const POISSON2D_GEN_POINTS: usize = 128;
pub const POISSON2D_OUT_POINTS: usize = 64;
pub const POISSON2D_MODES: usize = 10;

/// The nine-point stencil applied at interior point `(i, j)` of a field with
/// zero Dirichlet boundary (index 0 row/column stored, right/top boundary as
/// ghosts):
/// `(-Lap_9 u)_{ij} = -[4(N+S+E+W) + (NE+NW+SE+SW) - 20 C] / (6 h^2)`.
struct SineSolver {
    n: usize, // grid divisions; interior points are 1..n-1
    /// `s[k-1][i-1] = sin(k pi i / n)`.
    sine: Vec<f64>,
    /// Stencil eigenvalue per (p, q) pair.
    eig: Vec<f64>,
}

impl SineSolver {
    fn new(n: usize) -> Self {
        let m = n - 1;
        let mut sine = vec![0.0; m * m];
        for k in 1..n {
            for i in 1..n {
                sine[(k - 1) * m + (i - 1)] = (k as f64 * PI * i as f64 / n as f64).sin();
            }
        }
        // T = tridiag(1, -2, 1) has eigenvalues -4 sin^2(k pi / 2n) on the
        // sine basis; the nine-point operator is
        // -[(T (x) I + I (x) T)/h^2 + (T (x) T)/(6 h^2)].
        let h = 1.0 / n as f64;
        let mut eig = vec![0.0; m * m];
        let s: Vec<f64> = (1..n)
            .map(|k| {
                let t = (k as f64 * PI / (2.0 * n as f64)).sin();
                4.0 * t * t
            })
            .collect();
        for p in 0..m {
            for q in 0..m {
                eig[p * m + q] = (s[p] + s[q] - s[p] * s[q] / 6.0) / (h * h);
            }
        }
        Self { n, sine, eig }
    }

    /// Applies the sine matrix along both axes of an `m x m` interior field.
    fn sine_transform(&self, field: &[f64]) -> Vec<f64> {
        let m = self.n - 1;
        // rows: out1 = S * field
        let mut tmp = vec![0.0; m * m];
        for k in 0..m {
            for i in 0..m {
                let s = self.sine[k * m + i];
                if s == 0.0 {
                    continue;
                }
                let frow = &field[i * m..(i + 1) * m];
                let trow = &mut tmp[k * m..(k + 1) * m];
                for (t, f) in trow.iter_mut().zip(frow) {
                    *t += s * f;
                }
            }
        }
        // cols: out = out1 * S^T  (S symmetric)
        let mut out = vec![0.0; m * m];
        for r in 0..m {
            for j in 0..m {
                let v = tmp[r * m + j];
                if v == 0.0 {
                    continue;
                }
                let srow = &self.sine[j * m..(j + 1) * m];
                let orow = &mut out[r * m..(r + 1) * m];
                for (o, s) in orow.iter_mut().zip(srow) {
                    *o += v * s;
                }
            }
        }
        out
    }

    /// Solves `-Lap_9 u = f` for the interior values.
    fn solve(&self, f_interior: &[f64]) -> Vec<f64> {
        let mut coeffs = self.sine_transform(f_interior);
        let norm = (2.0 / self.n as f64) * (2.0 / self.n as f64);
        for (c, e) in coeffs.iter_mut().zip(&self.eig) {
            *c = *c / e * norm;
        }
        self.sine_transform(&coeffs)
    }
}

/// `-Lap_9 u` evaluated at every interior point of a full `n x n` field
/// stored with boundary row/column 0 and ghost right/top boundaries.
pub fn poisson2d_apply_stencil(u_full: &[f64], n: usize) -> Vec<f64> {
    let m = n - 1;
    let h2 = 1.0 / (n as f64 * n as f64);
    let at = |i: isize, j: isize| -> f64 {
        if i <= 0 || j <= 0 || i >= n as isize || j >= n as isize {
            0.0
        } else {
            u_full[i as usize * n + j as usize]
        }
    };
    let mut out = vec![0.0; m * m];
    for i in 1..n {
        for j in 1..n {
            let (ii, jj) = (i as isize, j as isize);
            let cross = at(ii - 1, jj) + at(ii + 1, jj) + at(ii, jj - 1) + at(ii, jj + 1);
            let diag = at(ii - 1, jj - 1) + at(ii - 1, jj + 1) + at(ii + 1, jj - 1) + at(ii + 1, jj + 1);
            out[(i - 1) * m + (j - 1)] =
                -(4.0 * cross + diag - 20.0 * at(ii, jj)) / (6.0 * h2);
        }
    }
    out
}

/// Relative residual of a full-field pair under the generating stencil.
pub fn poisson2d_residual(f_full: &[f64], u_full: &[f64], n: usize) -> f64 {
    let au = poisson2d_apply_stencil(u_full, n);
    let m = n - 1;
    let mut num = 0.0;
    let mut den = 0.0;
    for i in 1..n {
        for j in 1..n {
            let fv = f_full[i * n + j];
            let d = au[(i - 1) * m + (j - 1)] - fv;
            num += d * d;
            den += fv * fv;
        }
    }
    (num / den).sqrt()
}

/// Forcing field on the full grid: double sine series with `10 x 10` random
/// coefficients, zero along the boundary.
pub fn poisson2d_forcing(sample_seed: u64, n: usize) -> Vec<f64> {
    let mut rng = ChaCha8Rng::seed_from_u64(sample_seed);
    let mut coeffs = [[0.0; POISSON2D_MODES]; POISSON2D_MODES];
    for row in coeffs.iter_mut() {
        for c in row.iter_mut() {
            *c = rng.random::<f64>();
        }
    }
    // Tabulate sin(2 pi k x_i) once per direction.
    let mut table = vec![0.0; POISSON2D_MODES * n];
    for k in 0..POISSON2D_MODES {
        for i in 0..n {
            table[k * n + i] = (2.0 * PI * (k + 1) as f64 * i as f64 / n as f64).sin();
        }
    }
    let mut f = vec![0.0; n * n];
    for i in 0..n {
        for j in 0..n {
            let mut acc = 0.0;
            for (kx, row) in coeffs.iter().enumerate() {
                let sx = table[kx * n + i];
                if sx == 0.0 {
                    continue;
                }
                let mut inner = 0.0;
                for (ky, c) in row.iter().enumerate() {
                    inner += c * table[ky * n + j];
                }
                acc += sx * inner;
            }
            f[i * n + j] = acc;
        }
    }
    for i in 0..n {
        f[i] = 0.0; // j = 0 column is x2 = 0
        f[i * n] = 0.0; // i = 0 row is x1 = 0
    }
    f
}

/// One fine sample `(f, u)` as full 128x128 fields (boundary included).
pub fn poisson2d_sample(solver: &SineSolverHandle, sample_seed: u64) -> (Vec<f64>, Vec<f64>) {
    let n = solver.0.n;
    let m = n - 1;
    let f = poisson2d_forcing(sample_seed, n);
    let mut f_int = vec![0.0; m * m];
    for i in 1..n {
        for j in 1..n {
            f_int[(i - 1) * m + (j - 1)] = f[i * n + j];
        }
    }
    let u_int = solver.0.solve(&f_int);
    let mut u = vec![0.0; n * n];
    for i in 1..n {
        for j in 1..n {
            u[i * n + j] = u_int[(i - 1) * m + (j - 1)];
        }
    }
    (f, u)
}

/// Opaque precomputed solver so callers can amortize the sine tables.
pub struct SineSolverHandle(SineSolver);

pub fn poisson2d_solver() -> SineSolverHandle {
    SineSolverHandle(SineSolver::new(POISSON2D_GEN_POINTS))
}

pub fn gen_poisson_2d(n_train: usize, n_test: usize, master_seed: u64) -> Result<Dataset> {
    let n = n_train + n_test;
    let solver = poisson2d_solver();
    let g = POISSON2D_GEN_POINTS;
    let stride = g / POISSON2D_OUT_POINTS;
    let samples: Vec<(Vec<f64>, Vec<f64>)> = (0..n)
        .into_par_iter()
        .map(|idx| poisson2d_sample(&solver, seed::derive(master_seed, idx as u64)))
        .collect();
    let o = POISSON2D_OUT_POINTS;
    let mut inputs = Tensor::zeros(&[n, o, o]);
    let mut targets = Tensor::zeros(&[n, o, o]);
    for (b, (f, u)) in samples.iter().enumerate() {
        let fd = downsample(&Tensor::from_vec(&[g, g], f.clone())?, &[stride, stride])?;
        let ud = downsample(&Tensor::from_vec(&[g, g], u.clone())?, &[stride, stride])?;
        inputs.chunk_mut(n, b).copy_from_slice(fd.data());
        targets.chunk_mut(n, b).copy_from_slice(ud.data());
    }
    let mut notes = BTreeMap::new();
    notes.insert(
        "stencil".to_string(),
        "fourth-order nine-point Mehrstellen stencil; right-hand side used as sampled (no averaging); direct solve by sine-basis diagonalization".to_string(),
    );
    Ok(Dataset {
        inputs,
        targets,
        meta: DatasetMeta {
            equation: "poisson2d".to_string(),
            n_train,
            n_test,
            seed: master_seed,
            generator_version: GENERATOR_VERSION.to_string(),
            grid: GridMeta {
                gen_extent: vec![g, g],
                out_extent: vec![o, o],
                domain: vec![(0.0, 1.0), (0.0, 1.0)],
                spacing: vec![1.0 / g as f64, 1.0 / g as f64],
            },
            constants: BTreeMap::from([("modes_per_direction".to_string(), POISSON2D_MODES as f64)]),
            notes,
        },
    })
}
