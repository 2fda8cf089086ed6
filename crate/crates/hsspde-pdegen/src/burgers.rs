//! 1D viscous Burgers trajectories: u_t + u u_x = nu u_xx, second-order
//! finite differences in space, implicit trapezoidal rule with Newton
//! iterations in time (A-stable, second order).

use crate::banded::solve_tridiagonal;
use crate::dataset::{downsample, DatasetMeta, GridMeta, TrajectoryDataset, GENERATOR_VERSION};
use crate::error::{PdegenError, Result};
use hsspde_core::seed;
use hsspde_neural::Tensor;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use std::collections::BTreeMap;
use std::f64::consts::PI;

pub const BURGERS_NU: f64 = 0.001;
pub const BURGERS_T_END: f64 = 15.0;
pub const BURGERS_DT: f64 = 0.2;
pub const BURGERS_GEN_POINTS: usize = 1024;
pub const BURGERS_OUT_POINTS: usize = 256;
pub const BURGERS_MODES: usize = 10;
/// Default internal time step; the refinement check halves it.
pub const BURGERS_DT_INTERNAL: f64 = 5e-4;

pub fn burgers_n_steps() -> usize {
    (BURGERS_T_END / BURGERS_DT).round() as usize + 1
}

/// Grid `x_i = i / n` on [0, 1); x = 1 is the right-boundary ghost.
fn grid_x(i: usize, n: usize) -> f64 {
    i as f64 / n as f64
}

/// Normalized initial condition: `sum_k c_k sin(2 pi (k+1) x)`,
/// `c_k ~ U(-1, 1)`, scaled to max |u0| = 1.
pub fn burgers_initial_condition(sample_seed: u64, n: usize) -> Vec<f64> {
    let mut rng = ChaCha8Rng::seed_from_u64(sample_seed);
    let coeffs: Vec<f64> = (0..BURGERS_MODES)
        .map(|_| rng.random::<f64>() * 2.0 - 1.0)
        .collect();
    let mut u0 = vec![0.0; n];
    for (i, slot) in u0.iter_mut().enumerate() {
        let x = grid_x(i, n);
        *slot = coeffs
            .iter()
            .enumerate()
            .map(|(k, c)| c * (2.0 * PI * (k + 2) as f64 * x).sin())
            .sum();
    }
    let max_abs = u0.iter().fold(0.0f64, |m, v| m.max(v.abs()));
    for v in &mut u0 {
        *v /= max_abs;
    }
    u0
}

/// Spatial operator on the interior unknowns (u_0 = 0 pinned, ghost u(1)=0):
/// `F(u)_i = -u_i (u_{i+1} - u_{i-1}) / (2h) + nu (u_{i+1} - 2u_i + u_{i-1}) / h^2`.
fn rhs(u: &[f64], h: f64, out: &mut [f64]) {
    let m = u.len();
    let inv2h = 1.0 / (2.0 * h);
    let invh2 = 1.0 / (h * h);
    for i in 0..m {
        let left = if i > 0 { u[i - 1] } else { 0.0 };
        let right = if i + 1 < m { u[i + 1] } else { 0.0 };
        out[i] = -u[i] * (right - left) * inv2h + BURGERS_NU * (right - 2.0 * u[i] + left) * invh2;
    }
}

/// One implicit trapezoidal step with Newton; returns the new interior state.
fn trapezoidal_step(
    u: &[f64],
    dt: f64,
    h: f64,
    trajectory: usize,
    step: usize,
) -> Result<Vec<f64>> {
    let m = u.len();
    let inv2h = 1.0 / (2.0 * h);
    let invh2 = 1.0 / (h * h);
    let mut fu = vec![0.0; m];
    rhs(u, h, &mut fu);
    let mut w = u.to_vec(); // initial Newton guess: previous state
    let mut fw = vec![0.0; m];
    let mut g = vec![0.0; m];
    for _ in 0..25 {
        rhs(&w, h, &mut fw);
        let mut res = 0.0f64;
        for i in 0..m {
            g[i] = w[i] - u[i] - 0.5 * dt * (fu[i] + fw[i]);
            res = res.max(g[i].abs());
        }
        if res <= 1e-12 {
            return Ok(w);
        }
        // J = I - dt/2 * F'(w), tridiagonal.
        let mut lower = vec![0.0; m];
        let mut diag = vec![0.0; m];
        let mut upper = vec![0.0; m];
        for i in 0..m {
            let left = if i > 0 { w[i - 1] } else { 0.0 };
            let right = if i + 1 < m { w[i + 1] } else { 0.0 };
            let d_center = -(right - left) * inv2h - 2.0 * BURGERS_NU * invh2;
            let d_left = w[i] * inv2h + BURGERS_NU * invh2;
            let d_right = -w[i] * inv2h + BURGERS_NU * invh2;
            diag[i] = 1.0 - 0.5 * dt * d_center;
            if i > 0 {
                lower[i] = -0.5 * dt * d_left;
            }
            if i + 1 < m {
                upper[i] = -0.5 * dt * d_right;
            }
        }
        let delta = solve_tridiagonal(&lower, &diag, &upper, &g)?;
        for i in 0..m {
            w[i] -= delta[i];
        }
    }
    let mut res = 0.0f64;
    rhs(&w, h, &mut fw);
    for i in 0..m {
        res = res.max((w[i] - u[i] - 0.5 * dt * (fu[i] + fw[i])).abs());
    }
    Err(PdegenError::NewtonDiverged {
        trajectory,
        step,
        residual: res,
    })
}

/// Fine-grid trajectory sampled every `BURGERS_DT`, integrating with the
/// given internal step bound.
pub fn burgers_trajectory_fine(
    sample_seed: u64,
    dt_internal: f64,
    trajectory: usize,
) -> Result<Vec<Vec<f64>>> {
    let n = BURGERS_GEN_POINTS;
    let h = 1.0 / n as f64;
    let u0 = burgers_initial_condition(sample_seed, n);
    let steps_per_out = (BURGERS_DT / dt_internal).ceil() as usize;
    let dt = BURGERS_DT / steps_per_out as f64;
    let mut out = Vec::with_capacity(burgers_n_steps());
    out.push(u0.clone());
    let mut u: Vec<f64> = u0[1..].to_vec(); // interior unknowns i = 1..n-1
    let mut step_count = 0usize;
    for _ in 1..burgers_n_steps() {
        for _ in 0..steps_per_out {
            u = trapezoidal_step(&u, dt, h, trajectory, step_count)?;
            step_count += 1;
        }
        let mut full = vec![0.0; n];
        full[1..].copy_from_slice(&u);
        out.push(full);
    }
    Ok(out)
}

pub fn gen_burgers_1d(
    n_train: usize,
    n_test: usize,
    master_seed: u64,
) -> Result<TrajectoryDataset> {
    let n = n_train + n_test;
    let t_steps = burgers_n_steps();
    let stride = BURGERS_GEN_POINTS / BURGERS_OUT_POINTS;
    let trajectories: Vec<Vec<Vec<f64>>> = (0..n)
        .into_par_iter()
        .map(|idx| {
            burgers_trajectory_fine(seed::derive(master_seed, idx as u64), BURGERS_DT_INTERNAL, idx)
        })
        .collect::<Result<_>>()?;
    let mut states = Tensor::zeros(&[n, t_steps, BURGERS_OUT_POINTS]);
    for (b, traj) in trajectories.iter().enumerate() {
        for (j, state) in traj.iter().enumerate() {
            let fine = Tensor::from_vec(&[BURGERS_GEN_POINTS], state.clone())?;
            let coarse = downsample(&fine, &[stride])?;
            states
                .chunk_mut(n * t_steps, b * t_steps + j)
                .copy_from_slice(coarse.data());
        }
    }
    let mut notes = BTreeMap::new();
    notes.insert(
        "integrator".to_string(),
        format!("implicit trapezoidal + Newton, internal step <= {BURGERS_DT_INTERNAL}; second-order central differences in space"),
    );
    Ok(TrajectoryDataset {
        states,
        dt: BURGERS_DT,
        meta: DatasetMeta {
            equation: "burgers1d".to_string(),
            n_train,
            n_test,
            seed: master_seed,
            generator_version: GENERATOR_VERSION.to_string(),
            grid: GridMeta {
                gen_extent: vec![BURGERS_GEN_POINTS],
                out_extent: vec![BURGERS_OUT_POINTS],
                domain: vec![(0.0, 1.0)],
                spacing: vec![1.0 / BURGERS_GEN_POINTS as f64],
            },
            constants: BTreeMap::from([
                ("nu".to_string(), BURGERS_NU),
                ("t_end".to_string(), BURGERS_T_END),
                ("dt".to_string(), BURGERS_DT),
                ("dt_internal".to_string(), BURGERS_DT_INTERNAL),
                ("modes".to_string(), BURGERS_MODES as f64),
            ]),
            notes,
        },
    })
}
