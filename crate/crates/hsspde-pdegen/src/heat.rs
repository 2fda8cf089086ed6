//! 1D heat equation trajectories. Initial conditions are finite sine sums,
//! so states are produced by the exact spectral solution (mode k decays as
//! exp(-kappa k^2 pi^2 t)); a Crank-Nicolson integrator is kept only as an
//! independent cross-check oracle.

use crate::banded::solve_tridiagonal;
use crate::dataset::{downsample, DatasetMeta, GridMeta, TrajectoryDataset, GENERATOR_VERSION};
use crate::error::Result;
use hsspde_core::seed;
use hsspde_neural::Tensor;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use std::collections::BTreeMap;
use std::f64::consts::PI;

pub const HEAT_KAPPA: f64 = 0.0002;
pub const HEAT_T_END: f64 = 8.0;
pub const HEAT_DT: f64 = 0.2;
pub const HEAT_GEN_POINTS: usize = 1024;
pub const HEAT_OUT_POINTS: usize = 256;
pub const HEAT_MODES: usize = 10;

/// Output steps including t = 0.
pub fn heat_n_steps() -> usize {
    (HEAT_T_END / HEAT_DT).round() as usize + 1
}

/// Grid with both boundaries stored: `x_i = i / (n - 1)`.
fn grid_x(i: usize, n: usize) -> f64 {
    i as f64 / (n - 1) as f64
}

/// Normalized mode amplitudes for one trajectory: raw initial condition
/// `sum_k 2 c_k sin(k pi x)`, `c_k ~ U(0,1)`, scaled so max |u0| over the
/// grid is exactly 1.
pub fn heat_amplitudes(sample_seed: u64, n: usize) -> Vec<f64> {
    let mut rng = ChaCha8Rng::seed_from_u64(sample_seed);
    let raw: Vec<f64> = (0..HEAT_MODES).map(|_| 2.0 * rng.random::<f64>()).collect();
    let mut max_abs = 0.0f64;
    for i in 0..n {
        let x = grid_x(i, n);
        let v: f64 = raw
            .iter()
            .enumerate()
            .map(|(k, a)| a * ((k + 1) as f64 * PI * x).sin())
            .sum();
        max_abs = max_abs.max(v.abs());
    }
    raw.iter().map(|a| a / max_abs).collect()
}

/// Exact solution at time `t` on the fine grid.
pub fn heat_state(amps: &[f64], t: f64, n: usize) -> Vec<f64> {
    let decays: Vec<f64> = amps
        .iter()
        .enumerate()
        .map(|(k, a)| {
            let kpi = (k + 1) as f64 * PI;
            a * (-HEAT_KAPPA * kpi * kpi * t).exp()
        })
        .collect();
    (0..n)
        .map(|i| {
            let x = grid_x(i, n);
            decays
                .iter()
                .enumerate()
                .map(|(k, d)| d * ((k + 1) as f64 * PI * x).sin())
                .sum()
        })
        .collect()
}

/// Full fine-grid trajectory: `heat_n_steps()` states of 1024 points.
pub fn heat_trajectory_fine(sample_seed: u64) -> Vec<Vec<f64>> {
    let amps = heat_amplitudes(sample_seed, HEAT_GEN_POINTS);
    (0..heat_n_steps())
        .map(|j| heat_state(&amps, j as f64 * HEAT_DT, HEAT_GEN_POINTS))
        .collect()
}

/// Crank-Nicolson integration of `u_t = kappa u_xx` (second-order space,
/// Dirichlet, internal step `dt_int`), sampled at the output cadence.
/// Independent of the spectral path; used to cross-check it.
pub fn heat_trajectory_crank_nicolson(u0: &[f64], dt_int: f64) -> Vec<Vec<f64>> {
    let n = u0.len();
    let h = 1.0 / (n - 1) as f64;
    let r = HEAT_KAPPA * dt_int / (2.0 * h * h);
    let m = n - 2; // interior points
    let lower = vec![-r; m];
    let diag = vec![1.0 + 2.0 * r; m];
    let upper = vec![-r; m];
    let steps_per_out = (HEAT_DT / dt_int).round() as usize;
    let mut out = Vec::with_capacity(heat_n_steps());
    out.push(u0.to_vec());
    let mut u: Vec<f64> = u0[1..n - 1].to_vec();
    for _ in 1..heat_n_steps() {
        for _ in 0..steps_per_out {
            // rhs = (I + r D2) u with zero boundaries.
            let mut rhs = vec![0.0; m];
            for i in 0..m {
                let left = if i > 0 { u[i - 1] } else { 0.0 };
                let right = if i + 1 < m { u[i + 1] } else { 0.0 };
                rhs[i] = u[i] + r * (left - 2.0 * u[i] + right);
            }
            u = solve_tridiagonal(&lower, &diag, &upper, &rhs).expect("CN system is SPD");
        }
        let mut full = vec![0.0; n];
        full[1..n - 1].copy_from_slice(&u);
        out.push(full);
    }
    out
}

pub fn gen_heat_1d(n_train: usize, n_test: usize, master_seed: u64) -> Result<TrajectoryDataset> {
    let n = n_train + n_test;
    let t_steps = heat_n_steps();
    let stride = HEAT_GEN_POINTS / HEAT_OUT_POINTS;
    let trajectories: Vec<Vec<Vec<f64>>> = (0..n)
        .into_par_iter()
        .map(|idx| heat_trajectory_fine(seed::derive(master_seed, idx as u64)))
        .collect();
    let mut states = Tensor::zeros(&[n, t_steps, HEAT_OUT_POINTS]);
    for (b, traj) in trajectories.iter().enumerate() {
        for (j, state) in traj.iter().enumerate() {
            let fine = Tensor::from_vec(&[HEAT_GEN_POINTS], state.clone())?;
            let coarse = downsample(&fine, &[stride])?;
            states
                .chunk_mut(n * t_steps, b * t_steps + j)
                .copy_from_slice(coarse.data());
        }
    }
    let mut notes = BTreeMap::new();
    notes.insert(
        "solution".to_string(),
        "exact spectral solution of the finite sine-sum initial condition; Crank-Nicolson kept as a cross-check oracle".to_string(),
    );
    Ok(TrajectoryDataset {
        states,
        dt: HEAT_DT,
        meta: DatasetMeta {
            equation: "heat1d".to_string(),
            n_train,
            n_test,
            seed: master_seed,
            generator_version: GENERATOR_VERSION.to_string(),
            grid: GridMeta {
                gen_extent: vec![HEAT_GEN_POINTS],
                out_extent: vec![HEAT_OUT_POINTS],
                domain: vec![(0.0, 1.0)],
                spacing: vec![1.0 / (HEAT_GEN_POINTS - 1) as f64],
            },
            constants: BTreeMap::from([
                ("kappa".to_string(), HEAT_KAPPA),
                ("t_end".to_string(), HEAT_T_END),
                ("dt".to_string(), HEAT_DT),
                ("modes".to_string(), HEAT_MODES as f64),
            ]),
            notes,
        },
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn single_mode_decays_exactly() {
        // u0 = sin(pi x): u(x, 1) = exp(-kappa pi^2) sin(pi x).
        let n = 257;
        let amps = {
            let mut a = vec![0.0; HEAT_MODES];
            a[0] = 1.0;
            a
        };
        let u = heat_state(&amps, 1.0, n);
        let factor = (-HEAT_KAPPA * PI * PI).exp();
        for (i, v) in u.iter().enumerate() {
            let expect = factor * (PI * grid_x(i, n)).sin();
            assert!((v - expect).abs() <= 1e-14);
        }
    }

    #[test]
    fn initial_condition_max_abs_is_one() {
        for idx in 0..5u64 {
            let amps = heat_amplitudes(seed::derive(8, idx), HEAT_GEN_POINTS);
            let u0 = heat_state(&amps, 0.0, HEAT_GEN_POINTS);
            let max = u0.iter().fold(0.0f64, |m, v| m.max(v.abs()));
            assert!((max - 1.0).abs() <= 1e-15, "max {max}");
        }
    }

    #[test]
    fn energy_decays_along_trajectories() {
        let traj = heat_trajectory_fine(seed::derive(3, 0));
        let mut prev = f64::INFINITY;
        for state in &traj {
            let norm: f64 = state.iter().map(|v| v * v).sum::<f64>().sqrt();
            assert!(norm <= prev + 1e-12);
            prev = norm;
        }
    }

    #[test]
    fn crank_nicolson_cross_check() {
        let amps = heat_amplitudes(seed::derive(19, 0), HEAT_GEN_POINTS);
        let analytic = (0..heat_n_steps())
            .map(|j| heat_state(&amps, j as f64 * HEAT_DT, HEAT_GEN_POINTS))
            .collect::<Vec<_>>();
        let numeric = heat_trajectory_crank_nicolson(&analytic[0], 1e-3);
        let mut worst = 0.0f64;
        for (a, b) in analytic.iter().zip(&numeric) {
            for (x, y) in a.iter().zip(b) {
                worst = worst.max((x - y).abs());
            }
        }
        assert!(worst <= 1e-4, "max discrepancy {worst:e}");
    }

    #[test]
    fn dataset_shape_is_41_steps_by_256_points() {
        let ds = gen_heat_1d(2, 1, 7).unwrap();
        assert_eq!(ds.states.shape(), &[3, 41, 256]);
        assert_eq!(ds.dt, HEAT_DT);
        assert!(ds.states.all_finite());
        let again = gen_heat_1d(2, 1, 7).unwrap();
        assert_eq!(ds.states, again.states);
    }
}
