//! 1D Poisson data: -u'' = f on [0, 1], homogeneous Dirichlet, fourth-order
//! five-point interior stencil, direct banded solve.

use crate::banded::{BandedLu, BandedMatrix};
use crate::dataset::{downsample, Dataset, DatasetMeta, GridMeta, GENERATOR_VERSION};
use crate::error::Result;
use hsspde_core::seed;
use hsspde_neural::Tensor;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use std::collections::BTreeMap;
use std::f64::consts::PI;

pub const POISSON1D_GEN_POINTS: usize = 1024;
pub const POISSON1D_OUT_POINTS: usize = 256;
pub const POISSON1D_MODES: usize = 10;

/// Grid: `x_i = i * h`, `h = 1/n`, so index 0 is the left boundary and the
/// right boundary `x = 1` sits one spacing past the last point (a ghost with
/// `u = 0`).
fn grid_x(i: usize, n: usize) -> f64 {
    i as f64 / n as f64
}

/// Assembles the pentadiagonal operator for `-u''` with Dirichlet rows.
///
/// Row 0 pins `u(0) = 0`. Interior rows use the fourth-order stencil
/// `(1, -16, 30, -16, 1) / (12 h^2)`; the two rows that would reach past a
/// boundary close with the second-order three-point stencil on the left and
/// the ghost `u(1) = 0` on the right.
pub fn poisson1d_operator(n: usize) -> BandedMatrix {
    let h = 1.0 / n as f64;
    let h2 = h * h;
    let mut a = BandedMatrix::new(n, 2, 2);
    a.set(0, 0, 1.0);
    // Left closure: three-point at i = 1 (stencil would need x_{-1}).
    a.set(1, 0, -1.0 / h2);
    a.set(1, 1, 2.0 / h2);
    a.set(1, 2, -1.0 / h2);
    let c = 1.0 / (12.0 * h2);
    for i in 2..n - 1 {
        a.set(i, i - 2, c);
        a.set(i, i - 1, -16.0 * c);
        a.set(i, i, 30.0 * c);
        a.set(i, i + 1, -16.0 * c);
        if i + 2 < n {
            a.set(i, i + 2, c);
        } // else: ghost u(1) = 0 drops the entry
    }
    // Right closure: three-point at i = n-1 with the ghost.
    a.set(n - 1, n - 2, -1.0 / h2);
    a.set(n - 1, n - 1, 2.0 / h2);
    a
}

/// The same operator restricted to the interior unknowns `u_1 .. u_{n-1}`
/// (the pinned `u_0 = 0` column is eliminated, so the solved boundary value
/// is exactly zero). Row `r` corresponds to grid row `r + 1`.
pub fn poisson1d_interior_operator(n: usize) -> BandedMatrix {
    let h = 1.0 / n as f64;
    let h2 = h * h;
    let m = n - 1;
    let mut a = BandedMatrix::new(m, 2, 2);
    let add = |a: &mut BandedMatrix, gi: usize, gj: isize, v: f64| {
        // Grid column 0 multiplies u_0 = 0; grid column n is the ghost.
        if gj >= 1 && gj < n as isize {
            a.set(gi - 1, gj as usize - 1, v);
        }
    };
    add(&mut a, 1, 0, -1.0 / h2);
    add(&mut a, 1, 1, 2.0 / h2);
    add(&mut a, 1, 2, -1.0 / h2);
    let c = 1.0 / (12.0 * h2);
    for i in 2..n - 1 {
        let gi = i as isize;
        add(&mut a, i, gi - 2, c);
        add(&mut a, i, gi - 1, -16.0 * c);
        add(&mut a, i, gi, 30.0 * c);
        add(&mut a, i, gi + 1, -16.0 * c);
        add(&mut a, i, gi + 2, c);
    }
    add(&mut a, n - 1, n as isize - 2, -1.0 / h2);
    add(&mut a, n - 1, n as isize - 1, 2.0 / h2);
    a
}

/// Forcing term for one sample: a ten-mode random sine series, zeroed at the
/// first two and last two grid points.
pub fn poisson1d_forcing(sample_seed: u64, n: usize) -> Vec<f64> {
    let mut rng = ChaCha8Rng::seed_from_u64(sample_seed);
    let coeffs: Vec<f64> = (0..POISSON1D_MODES).map(|_| rng.random::<f64>()).collect();
    let mut f = vec![0.0; n];
    for (i, slot) in f.iter_mut().enumerate() {
        let x = grid_x(i, n);
        let mut acc = 0.0;
        for (k, c) in coeffs.iter().enumerate() {
            acc += c * (2.0 * (k + 1) as f64 * PI * x).sin();
        }
        *slot = acc;
    }
    f[0] = 0.0;
    f[1] = 0.0;
    f[n - 2] = 0.0;
    f[n - 1] = 0.0;
    f
}

/// Relative discrete residual `||A u - f|| / ||f||` under the generating
/// operator.
pub fn poisson1d_residual(f: &[f64], u: &[f64]) -> Result<f64> {
    let a = poisson1d_operator(f.len());
    let au = a.matvec(u)?;
    let num: f64 = au
        .iter()
        .zip(f)
        .map(|(x, y)| (x - y) * (x - y))
        .sum::<f64>()
        .sqrt();
    let den: f64 = f.iter().map(|v| v * v).sum::<f64>().sqrt();
    Ok(num / den)
}

/// One fine-grid sample `(f, u)` at 1024 points; `lu` is the factored
/// interior operator.
pub fn poisson1d_sample(lu: &BandedLu, sample_seed: u64) -> Result<(Vec<f64>, Vec<f64>)> {
    let n = POISSON1D_GEN_POINTS;
    let f = poisson1d_forcing(sample_seed, n);
    let u_int = lu.solve(&f[1..])?;
    let mut u = vec![0.0; n];
    u[1..].copy_from_slice(&u_int);
    Ok((f, u))
}

/// Full dataset: `n_train + n_test` samples, inputs `f` and targets `u`
/// downsampled to 256 points. Sub-seeds are derived per sample index, so
/// generation is order-independent.
pub fn gen_poisson_1d(n_train: usize, n_test: usize, master_seed: u64) -> Result<Dataset> {
    let n = n_train + n_test;
    let lu = poisson1d_interior_operator(POISSON1D_GEN_POINTS).factor()?;
    let stride = POISSON1D_GEN_POINTS / POISSON1D_OUT_POINTS;
    let samples: Vec<(Vec<f64>, Vec<f64>)> = (0..n)
        .into_par_iter()
        .map(|idx| poisson1d_sample(&lu, seed::derive(master_seed, idx as u64)))
        .collect::<Result<_>>()?;
    let mut inputs = Tensor::zeros(&[n, POISSON1D_OUT_POINTS]);
    let mut targets = Tensor::zeros(&[n, POISSON1D_OUT_POINTS]);
    for (b, (f, u)) in samples.iter().enumerate() {
        let fd = downsample(&Tensor::from_vec(&[POISSON1D_GEN_POINTS], f.clone())?, &[stride])?;
        let ud = downsample(&Tensor::from_vec(&[POISSON1D_GEN_POINTS], u.clone())?, &[stride])?;
        inputs.chunk_mut(n, b).copy_from_slice(fd.data());
        targets.chunk_mut(n, b).copy_from_slice(ud.data());
    }
    let mut notes = BTreeMap::new();
    notes.insert(
        "stencil".to_string(),
        "fourth-order (1,-16,30,-16,1)/(12h^2); three-point closure at the first interior row and at the last grid point; ghost u(1)=0".to_string(),
    );
    notes.insert(
        "forcing".to_string(),
        format!("sum of {POISSON1D_MODES} sine modes sin(2k pi x), coefficients U(0,1), zeroed at the first/last two grid points"),
    );
    Ok(Dataset {
        inputs,
        targets,
        meta: DatasetMeta {
            equation: "poisson1d".to_string(),
            n_train,
            n_test,
            seed: master_seed,
            generator_version: GENERATOR_VERSION.to_string(),
            grid: GridMeta {
                gen_extent: vec![POISSON1D_GEN_POINTS],
                out_extent: vec![POISSON1D_OUT_POINTS],
                domain: vec![(0.0, 1.0)],
                spacing: vec![1.0 / POISSON1D_GEN_POINTS as f64],
            },
            constants: BTreeMap::from([
                ("modes".to_string(), POISSON1D_MODES as f64),
            ]),
            notes,
        },
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn single_mode_matches_analytic_eigenfunction() {
        // f = sin(2 pi x)  =>  u = sin(2 pi x) / (4 pi^2), max error <= 1e-6.
        let n = POISSON1D_GEN_POINTS;
        let mut f = vec![0.0; n];
        for (i, slot) in f.iter_mut().enumerate() {
            *slot = (2.0 * PI * grid_x(i, n)).sin();
        }
        f[0] = 0.0;
        f[1] = 0.0;
        f[n - 2] = 0.0;
        f[n - 1] = 0.0;
        let u_int = poisson1d_interior_operator(n).solve(&f[1..]).unwrap();
        let mut u = vec![0.0; n];
        u[1..].copy_from_slice(&u_int);
        let mut worst = 0.0f64;
        for (i, v) in u.iter().enumerate() {
            let exact = (2.0 * PI * grid_x(i, n)).sin() / (4.0 * PI * PI);
            worst = worst.max((v - exact).abs());
        }
        assert!(worst <= 1e-6, "max error {worst:e}");
    }

    #[test]
    fn generated_pairs_satisfy_the_discrete_residual() {
        let lu = poisson1d_interior_operator(POISSON1D_GEN_POINTS)
            .factor()
            .unwrap();
        for idx in 0..4u64 {
            let (f, u) = poisson1d_sample(&lu, seed::derive(33, idx)).unwrap();
            let r = poisson1d_residual(&f, &u).unwrap();
            assert!(r <= 1e-10, "sample {idx} residual {r:e}");
            assert_eq!(u[0], 0.0, "left boundary is a Dirichlet row");
        }
    }

    #[test]
    fn dataset_is_deterministic_and_well_shaped() {
        let a = gen_poisson_1d(3, 2, 11).unwrap();
        let b = gen_poisson_1d(3, 2, 11).unwrap();
        assert_eq!(a.inputs, b.inputs);
        assert_eq!(a.targets, b.targets);
        assert_eq!(a.inputs.shape(), &[5, 256]);
        assert!(a.inputs.all_finite() && a.targets.all_finite());
        let c = gen_poisson_1d(3, 2, 12).unwrap();
        assert_ne!(a.inputs, c.inputs);
    }
}
