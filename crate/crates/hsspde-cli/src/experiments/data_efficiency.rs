//! Train-size sweep on 1D Poisson: structured model vs a parameter-matched
//! dense baseline, evaluated on one fixed held-out set.

use crate::commands::build_model_spec;
use crate::config::{DataEfficiencyConfig, ModelConfig};
use crate::error::{CliError, Result};
use crate::plot::{render_line_chart, PlotOptions, Series};
use hsspde_core::seed;
use hsspde_metrics::relative_l2;
use hsspde_neural::{NeuralHssModel, Tensor};
use hsspde_optim::fit;
use hsspde_pdegen::{gen_poisson_1d, load, Dataset, LoadedDataset};
use std::io::Write;
use std::time::Instant;

#[derive(Debug, Clone)]
pub struct SweepPoint {
    pub n_train: usize,
    pub model: String,
    pub rel_l2: f64,
    pub params: usize,
    pub wall_s: f64,
}

#[derive(Debug, Clone)]
pub struct SweepResult {
    pub points: Vec<SweepPoint>,
    pub hss_params: usize,
    pub dense_params: usize,
}

fn subset(t: &Tensor, count: usize) -> Tensor {
    let n = t.shape()[0];
    let per = t.len() / n;
    let mut shape = t.shape().to_vec();
    shape[0] = count;
    Tensor::from_vec(&shape, t.data()[..count * per].to_vec()).unwrap()
}

fn train_and_eval(
    arch_cfg: &ModelConfig,
    config: &DataEfficiencyConfig,
    train_inputs: &Tensor,
    train_targets: &Tensor,
    test: (&Tensor, &Tensor),
    init_seed: u64,
) -> Result<(f64, usize, f64)> {
    let dims = train_inputs.shape()[1..].to_vec();
    let spec = build_model_spec(arch_cfg, &dims)?;
    let mut model = NeuralHssModel::build(&spec, init_seed, arch_cfg.init_scale)?;
    let params = model.param_count();
    let mut train_cfg = config.train.clone();
    train_cfg.shuffle_seed = seed::derive(init_seed, 1);
    let t0 = Instant::now();
    fit(&mut model, train_inputs, train_targets, None, &train_cfg)?;
    let wall = t0.elapsed().as_secs_f64();
    let (pred, _) = model.forward(test.0)?;
    Ok((relative_l2(&pred, test.1)?, params, wall))
}

pub fn run_data_efficiency(config: &DataEfficiencyConfig) -> Result<SweepResult> {
    if config.sweep.is_empty() || config.sweep.windows(2).any(|w| w[0] >= w[1]) {
        return Err(CliError::Usage(
            "sweep must be a non-empty ascending list of train sizes".to_string(),
        ));
    }
    let max_n = *config.sweep.last().unwrap();
    let dataset: Dataset = match &config.dataset {
        Some(dir) => match load(dir)? {
            LoadedDataset::Steady(ds) => ds,
            LoadedDataset::Trajectory(_) => {
                return Err(CliError::Usage(
                    "data-efficiency sweep expects a steady dataset".to_string(),
                ))
            }
        },
        None => gen_poisson_1d(max_n, config.n_test, config.seed)?,
    };
    if dataset.meta.n_train < max_n {
        return Err(CliError::Usage(format!(
            "sweep needs {max_n} training samples, dataset has {}",
            dataset.meta.n_train
        )));
    }
    let (train_all, test) = dataset.split();

    // Parameter matching: the dense baseline width is derived from the HSS
    // budget once, then asserted to land within 10%.
    let dims = train_all.inputs.shape()[1..].to_vec();
    let hss_cfg = ModelConfig {
        arch: "hss".to_string(),
        ..config.model.clone()
    };
    let dense_cfg = ModelConfig {
        arch: "dense".to_string(),
        ..config.model.clone()
    };
    let hss_params = NeuralHssModel::build(&build_model_spec(&hss_cfg, &dims)?, 0, 0.0)?.param_count();
    let dense_params =
        NeuralHssModel::build(&build_model_spec(&dense_cfg, &dims)?, 0, 0.0)?.param_count();
    let gap = (dense_params as f64 - hss_params as f64).abs() / hss_params as f64;
    if gap > 0.10 {
        return Err(CliError::Compute(format!(
            "dense baseline is not parameter-matched: hss {hss_params}, dense {dense_params} ({:.1}% apart)",
            100.0 * gap
        )));
    }

    let mut points = Vec::new();
    for (idx, &n) in config.sweep.iter().enumerate() {
        let tin = subset(&train_all.inputs, n);
        let ttg = subset(&train_all.targets, n);
        for (arch, cfg) in [("hss", &hss_cfg), ("dense", &dense_cfg)] {
            let init_seed = seed::derive(config.seed, (idx * 2 + usize::from(arch == "dense")) as u64);
            let (rel, params, wall) = train_and_eval(
                cfg,
                config,
                &tin,
                &ttg,
                (&test.inputs, &test.targets),
                init_seed,
            )?;
            points.push(SweepPoint {
                n_train: n,
                model: arch.to_string(),
                rel_l2: rel,
                params,
                wall_s: wall,
            });
        }
    }
    let result = SweepResult {
        points,
        hss_params,
        dense_params,
    };
    write_outputs(config, &result)?;
    Ok(result)
}

fn write_outputs(config: &DataEfficiencyConfig, result: &SweepResult) -> Result<()> {
    std::fs::create_dir_all(&config.out)?;
    let mut csv = std::fs::File::create(config.out.join("data_efficiency.csv"))?;
    writeln!(csv, "n_train,model,rel_l2,params,wall_s")?;
    for p in &result.points {
        writeln!(
            csv,
            "{},{},{},{},{:.3}",
            p.n_train, p.model, p.rel_l2, p.params, p.wall_s
        )?;
    }
    // Wide layout for plotting.
    let mut wide = std::fs::File::create(config.out.join("data_efficiency_wide.csv"))?;
    writeln!(wide, "n_train,hss,dense")?;
    for &n in &config.sweep {
        let get = |arch: &str| {
            result
                .points
                .iter()
                .find(|p| p.n_train == n && p.model == arch)
                .map(|p| p.rel_l2)
                .unwrap_or(f64::NAN)
        };
        writeln!(wide, "{n},{},{}", get("hss"), get("dense"))?;
    }
    let collect = |arch: &str| -> Vec<(f64, f64)> {
        result
            .points
            .iter()
            .filter(|p| p.model == arch)
            .map(|p| (p.n_train as f64, p.rel_l2))
            .collect()
    };
    let svg = render_line_chart(
        &[
            Series {
                name: "hss".to_string(),
                points: collect("hss"),
            },
            Series {
                name: "dense baseline".to_string(),
                points: collect("dense"),
            },
        ],
        &PlotOptions {
            title: "train size vs relative test error".to_string(),
            x_label: "train size".to_string(),
            y_label: "relative L2 error".to_string(),
            log_x: true,
            log_y: true,
        },
    )?;
    std::fs::write(config.out.join("data_efficiency.svg"), svg)?;
    Ok(())
}
