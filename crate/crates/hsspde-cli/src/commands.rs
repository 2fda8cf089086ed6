//! The gen / train / eval subcommands.

use crate::config::{Equation, EvalConfig, GenConfig, ModelConfig, TrainCmdConfig};
use crate::error::{CliError, Result};
use hsspde_metrics::{relative_l2_report, rollout, trajectory_l2_report, EvalReport};
use hsspde_neural::{
    load_model, save_model, LayerSpec, MapSpec, ModelSpec, NeuralHssModel, Tensor,
};
use hsspde_optim::{fit, TrainReport};
use hsspde_pdegen as pdegen;
use hsspde_pdegen::{Dataset, LoadedDataset, TrajectoryDataset};

pub struct GenSummary {
    pub equation: String,
    pub n: usize,
    pub shape: Vec<usize>,
    pub check_name: String,
    pub check_value: f64,
    pub check_pass: bool,
}

pub fn cmd_gen(config: &GenConfig) -> Result<GenSummary> {
    let (n_train, n_test, seed) = (config.n_train, config.n_test, config.seed);
    if n_train + n_test == 0 {
        return Err(CliError::Usage("need at least one sample".to_string()));
    }
    let summary = match config.equation {
        Equation::Poisson1d => {
            let ds = pdegen::gen_poisson_1d(n_train, n_test, seed)?;
            pdegen::save_steady(&ds, &config.out)?;
            // Residual check on a few regenerated fine-grid pairs.
            let lu = pdegen::poisson1d::poisson1d_interior_operator(
                pdegen::poisson1d::POISSON1D_GEN_POINTS,
            )
            .factor()?;
            let mut worst = 0.0f64;
            for idx in 0..(n_train + n_test).min(5) {
                let (f, u) = pdegen::poisson1d::poisson1d_sample(
                    &lu,
                    hsspde_core::seed::derive(seed, idx as u64),
                )?;
                worst = worst.max(pdegen::poisson1d::poisson1d_residual(&f, &u)?);
            }
            GenSummary {
                equation: "poisson1d".into(),
                n: ds.len(),
                shape: ds.inputs.shape().to_vec(),
                check_name: "max discrete residual".into(),
                check_value: worst,
                check_pass: worst <= 1e-8,
            }
        }
        Equation::Poisson2d => {
            let ds = pdegen::gen_poisson_2d(n_train, n_test, seed)?;
            pdegen::save_steady(&ds, &config.out)?;
            let solver = pdegen::poisson2d::poisson2d_solver();
            let mut worst = 0.0f64;
            for idx in 0..(n_train + n_test).min(3) {
                let (f, u) = pdegen::poisson2d::poisson2d_sample(
                    &solver,
                    hsspde_core::seed::derive(seed, idx as u64),
                );
                worst = worst.max(pdegen::poisson2d::poisson2d_residual(
                    &f,
                    &u,
                    pdegen::poisson2d::POISSON2D_GEN_POINTS,
                ));
            }
            GenSummary {
                equation: "poisson2d".into(),
                n: ds.len(),
                shape: ds.inputs.shape().to_vec(),
                check_name: "max discrete residual".into(),
                check_value: worst,
                check_pass: worst <= 1e-8,
            }
        }
        Equation::Heat1d => {
            let ds = pdegen::gen_heat_1d(n_train, n_test, seed)?;
            pdegen::save_trajectory(&ds, &config.out)?;
            // Cross-check the first trajectory against the independent
            // Crank-Nicolson integrator on the fine grid.
            let fine =
                pdegen::heat::heat_trajectory_fine(hsspde_core::seed::derive(seed, 0));
            let numeric = pdegen::heat::heat_trajectory_crank_nicolson(&fine[0], 1e-3);
            let mut worst = 0.0f64;
            for (a, b) in fine.iter().zip(&numeric) {
                for (x, y) in a.iter().zip(b) {
                    worst = worst.max((x - y).abs());
                }
            }
            GenSummary {
                equation: "heat1d".into(),
                n: ds.n_trajectories(),
                shape: ds.states.shape().to_vec(),
                check_name: "max analytic-vs-integrator discrepancy".into(),
                check_value: worst,
                check_pass: worst <= 1e-4,
            }
        }
        Equation::Burgers1d => {
            let ds = pdegen::gen_burgers_1d(n_train, n_test, seed)?;
            pdegen::save_trajectory(&ds, &config.out)?;
            // Maximum-principle check over the stored states.
            let n = ds.n_trajectories();
            let t = ds.n_steps();
            let mut worst = 0.0f64;
            for b in 0..n {
                let m0 = ds
                    .states
                    .chunk(n * t, b * t)
                    .iter()
                    .fold(0.0f64, |m, v| m.max(v.abs()));
                for j in 0..t {
                    let m = ds
                        .states
                        .chunk(n * t, b * t + j)
                        .iter()
                        .fold(0.0f64, |m, v| m.max(v.abs()));
                    worst = worst.max(m - m0);
                }
            }
            GenSummary {
                equation: "burgers1d".into(),
                n,
                shape: ds.states.shape().to_vec(),
                check_name: "max overshoot above initial maximum".into(),
                check_value: worst,
                check_pass: worst <= 1e-6,
            }
        }
        Equation::HssRecovery => {
            let (ds, truth) = pdegen::gen_hss_recovery(
                config.recovery_dim,
                config.recovery_levels,
                config.recovery_rank,
                n_train,
                n_test,
                seed,
            )?;
            pdegen::save_steady(&ds, &config.out)?;
            let n = ds.len();
            let mut worst = 0.0f64;
            for b in 0..n {
                let y = truth.matvec(ds.inputs.chunk(n, b))?;
                for (a, t) in y.iter().zip(ds.targets.chunk(n, b)) {
                    worst = worst.max((a - t).abs());
                }
            }
            GenSummary {
                equation: "hss_recovery".into(),
                n,
                shape: ds.inputs.shape().to_vec(),
                check_name: "max target mismatch vs ground truth".into(),
                check_value: worst,
                check_pass: worst == 0.0,
            }
        }
    };
    if !summary.check_pass {
        return Err(CliError::Compute(format!(
            "{}: generation check failed: {} = {:e}",
            summary.equation, summary.check_name, summary.check_value
        )));
    }
    Ok(summary)
}

/// Builds the architecture for a 1D grid of extent `d` (or a 2D grid when
/// `dims.len() == 2`).
pub fn build_model_spec(model: &ModelConfig, dims: &[usize]) -> Result<ModelSpec> {
    let mut layers = Vec::with_capacity(model.depth);
    for i in 0..model.depth {
        let activation = i + 1 < model.depth || model.final_activation;
        let spec = match (model.arch.as_str(), dims.len()) {
            ("hss", 1) => LayerSpec::Hss1d {
                dim: dims[0],
                levels: model.levels,
                rank: model.rank,
                activation,
            },
            ("hss", 2) => LayerSpec::NdHss {
                dims: dims.to_vec(),
                levels: model.levels,
                rank: model.rank,
                outer_rank: model.outer_rank,
                activation,
            },
            ("dense", 1) => {
                let d = dims[0];
                let w = if model.width > 0 {
                    model.width
                } else {
                    dense_width_matching(model, d)?
                };
                let (in_dim, out_dim) = match (i == 0, i + 1 == model.depth) {
                    (true, true) => (d, d),
                    (true, false) => (d, w),
                    (false, true) => (w, d),
                    (false, false) => (w, w),
                };
                LayerSpec::Dense1d {
                    in_dim,
                    out_dim,
                    activation,
                }
            }
            (arch, ndims) => {
                return Err(CliError::Usage(format!(
                    "unsupported model arch '{arch}' for a {ndims}-dimensional grid"
                )))
            }
        };
        layers.push(spec);
    }
    Ok(ModelSpec {
        lift: MapSpec::Identity,
        layers,
        project: MapSpec::Identity,
    })
}

/// Width for the dense baseline so its parameter count matches the HSS model
/// of the same depth on the same grid.
pub fn dense_width_matching(model: &ModelConfig, d: usize) -> Result<usize> {
    let hss_cfg = ModelConfig {
        arch: "hss".to_string(),
        ..model.clone()
    };
    let hss_spec = build_model_spec(&hss_cfg, &[d])?;
    let hss_params = NeuralHssModel::build(&hss_spec, 0, 0.0)?.param_count() as f64;
    let depth = model.depth as f64;
    // Dense params: 2 d w + (depth - 2) w^2 + depth (alphas), depth >= 2.
    if model.depth < 2 {
        // Single dense layer is d x d; no width to tune.
        return Ok(d);
    }
    let a = depth - 2.0;
    let target = hss_params - depth;
    let w = if a == 0.0 {
        target / (2.0 * d as f64)
    } else {
        let disc = (d as f64 * d as f64) + a * target;
        (-(d as f64) + disc.sqrt()) / a
    };
    Ok(w.round().max(1.0) as usize)
}

fn residual_pairs(ds: &TrajectoryDataset, lo: usize, hi: usize) -> (Tensor, Tensor, f64) {
    let n = ds.n_trajectories();
    let t = ds.n_steps();
    let grid: usize = ds.states.shape()[2..].iter().product();
    let pairs = (hi - lo) * (t - 1);
    let mut inputs = Tensor::zeros(&[pairs, grid]);
    let mut deltas = Tensor::zeros(&[pairs, grid]);
    let mut row = 0usize;
    for b in lo..hi {
        for j in 0..t - 1 {
            let cur = ds.states.chunk(n * t, b * t + j);
            let nxt = ds.states.chunk(n * t, b * t + j + 1);
            inputs.chunk_mut(pairs, row).copy_from_slice(cur);
            for (slot, (a, c)) in deltas
                .chunk_mut(pairs, row)
                .iter_mut()
                .zip(nxt.iter().zip(cur))
            {
                *slot = a - c;
            }
            row += 1;
        }
    }
    let scale = deltas.data().iter().fold(0.0f64, |m, v| m.max(v.abs()));
    (inputs, deltas, scale)
}

pub struct TrainOutcome {
    pub report: TrainReport,
    pub model: NeuralHssModel,
    pub residual_scale: Option<f64>,
    pub param_count: usize,
}

pub fn cmd_train(config: &TrainCmdConfig) -> Result<TrainOutcome> {
    config
        .train
        .validate()
        .map_err(|e| CliError::Usage(e.to_string()))?;
    let loaded = pdegen::load(&config.dataset)?;
    let outcome = match &loaded {
        LoadedDataset::Steady(ds) => train_steady(config, ds)?,
        LoadedDataset::Trajectory(ds) => train_trajectory(config, ds)?,
    };
    std::fs::create_dir_all(&config.out)?;
    save_model(
        &config.out.join("model"),
        &outcome.model,
        config.seed,
        config.model.init_scale,
    )?;
    outcome.report.write_csv(&config.out.join("train.csv"))?;
    Ok(outcome)
}

fn train_steady(config: &TrainCmdConfig, ds: &Dataset) -> Result<TrainOutcome> {
    let dims = ds.inputs.shape()[1..].to_vec();
    let spec = build_model_spec(&config.model, &dims)?;
    let mut model = NeuralHssModel::build(&spec, config.seed, config.model.init_scale)?;
    let (train, test) = ds.split();
    let report = fit(
        &mut model,
        &train.inputs,
        &train.targets,
        Some((&test.inputs, &test.targets)),
        &config.train,
    )?;
    let param_count = model.param_count();
    Ok(TrainOutcome {
        report,
        model,
        residual_scale: None,
        param_count,
    })
}

fn train_trajectory(config: &TrainCmdConfig, ds: &TrajectoryDataset) -> Result<TrainOutcome> {
    let n_train = ds.meta.n_train.min(ds.n_trajectories());
    let (inputs, mut deltas, scale) = residual_pairs(ds, 0, n_train);
    if scale == 0.0 {
        return Err(CliError::Compute(
            "all training residuals are zero; nothing to learn".to_string(),
        ));
    }
    deltas.scale(1.0 / scale);
    let dims = vec![inputs.shape()[1]];
    let spec = build_model_spec(&config.model, &dims)?;
    let mut model = NeuralHssModel::build(&spec, config.seed, config.model.init_scale)?;
    let report = fit(&mut model, &inputs, &deltas, None, &config.train)?;
    // The normalization constant is frozen into the manifest; rollouts use it.
    model.residual_scale = Some(scale);
    let param_count = model.param_count();
    Ok(TrainOutcome {
        report,
        model,
        residual_scale: Some(scale),
        param_count,
    })
}

pub struct EvalOutcome {
    pub report: EvalReport,
    pub n_samples: usize,
}

pub fn cmd_eval(config: &EvalConfig) -> Result<EvalOutcome> {
    let (model, _) = load_model(&config.model)?;
    let loaded = pdegen::load(&config.dataset)?;
    let report = match &loaded {
        LoadedDataset::Steady(ds) => {
            let (_, test) = ds.split();
            let (pred, _) = model.forward(&test.inputs)?;
            relative_l2_report(&pred, &test.targets)?
        }
        LoadedDataset::Trajectory(ds) => eval_rollout(&model, ds)?,
    };
    std::fs::create_dir_all(&config.out)?;
    report.write_csv(&config.out.join("eval.csv"))?;
    let n_samples = report.len();
    Ok(EvalOutcome { report, n_samples })
}

/// Rolls the model out from each held-out initial state and scores the full
/// trajectory against the reference.
pub fn eval_rollout(model: &NeuralHssModel, ds: &TrajectoryDataset) -> Result<EvalReport> {
    let n = ds.n_trajectories();
    let t = ds.n_steps();
    let grid = ds.states.shape()[2];
    let lo = ds.meta.n_train.min(n);
    let count = n - lo;
    if count == 0 {
        return Err(CliError::Compute("dataset has no held-out trajectories".into()));
    }
    let mut pred = Tensor::zeros(&[count, t, grid]);
    let mut truth = Tensor::zeros(&[count, t, grid]);
    for (slot, b) in (lo..n).enumerate() {
        let u0 = Tensor::from_vec(&[grid], ds.states.chunk(n * t, b * t).to_vec())?;
        let states = rollout(model, &u0, t - 1)?;
        pred.chunk_mut(count, slot).copy_from_slice(states.data());
        for j in 0..t {
            truth
                .chunk_mut(count * t, slot * t + j)
                .copy_from_slice(ds.states.chunk(n * t, b * t + j));
        }
    }
    Ok(trajectory_l2_report(&pred, &truth)?)
}
