//! Per-subcommand experiment configurations. Every config is plain JSON with
//! unknown keys rejected; `--dump-config` prints the resolved values.

use crate::error::{CliError, Result};
use hsspde_optim::TrainConfig;
use serde::{de::DeserializeOwned, Deserialize, Serialize};
use std::path::{Path, PathBuf};

pub fn load_config<T: DeserializeOwned + Default>(path: Option<&Path>) -> Result<T> {
    match path {
        None => Ok(T::default()),
        Some(p) => {
            let text = std::fs::read_to_string(p)
                .map_err(|e| CliError::Usage(format!("cannot read config {}: {e}", p.display())))?;
            serde_json::from_str(&text)
                .map_err(|e| CliError::Usage(format!("config {}: {e}", p.display())))
        }
    }
}

pub fn dump_config<T: Serialize>(config: &T) -> Result<String> {
    serde_json::to_string_pretty(config)
        .map_err(|e| CliError::Compute(format!("cannot serialize config: {e}")))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "snake_case")]
#[clap(rename_all = "snake_case")]
pub enum Equation {
    Poisson1d,
    Poisson2d,
    Heat1d,
    Burgers1d,
    HssRecovery,
}

impl Equation {
    pub fn as_str(&self) -> &'static str {
        match self {
            Equation::Poisson1d => "poisson1d",
            Equation::Poisson2d => "poisson2d",
            Equation::Heat1d => "heat1d",
            Equation::Burgers1d => "burgers1d",
            Equation::HssRecovery => "hss_recovery",
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct GenConfig {
    pub equation: Equation,
    pub n_train: usize,
    pub n_test: usize,
    pub seed: u64,
    pub out: PathBuf,
    /// Only used by `hss_recovery`.
    pub recovery_dim: usize,
    pub recovery_levels: usize,
    pub recovery_rank: usize,
}

impl Default for GenConfig {
    fn default() -> Self {
        Self {
            equation: Equation::Poisson1d,
            n_train: 100,
            n_test: 20,
            seed: 1,
            out: PathBuf::from("data/poisson1d"),
            recovery_dim: 32,
            recovery_levels: 2,
            recovery_rank: 2,
        }
    }
}

/// Model hyperparameters; the grid extent comes from the dataset.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ModelConfig {
    /// "hss" or "dense" (the parameter-matched baseline).
    pub arch: String,
    pub levels: usize,
    pub rank: usize,
    /// Separable terms of the m-dimensional layer (2D datasets).
    pub outer_rank: usize,
    /// Number of stacked layers.
    pub depth: usize,
    /// Hidden width of the dense baseline; 0 means "match the HSS budget".
    pub width: usize,
    /// Keep the activation on the last layer.
    pub final_activation: bool,
    pub init_scale: f64,
}

impl Default for ModelConfig {
    fn default() -> Self {
        Self {
            arch: "hss".to_string(),
            levels: 3,
            rank: 2,
            outer_rank: 8,
            depth: 3,
            width: 0,
            final_activation: false,
            init_scale: 1.0,
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct TrainCmdConfig {
    pub dataset: PathBuf,
    pub model: ModelConfig,
    pub train: TrainConfig,
    pub out: PathBuf,
    pub seed: u64,
}

impl Default for TrainCmdConfig {
    fn default() -> Self {
        Self {
            dataset: PathBuf::from("data/poisson1d"),
            model: ModelConfig::default(),
            train: TrainConfig::default(),
            out: PathBuf::from("runs/train"),
            seed: 1,
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct EvalConfig {
    pub dataset: PathBuf,
    pub model: PathBuf,
    pub out: PathBuf,
}

impl Default for EvalConfig {
    fn default() -> Self {
        Self {
            dataset: PathBuf::from("data/poisson1d"),
            model: PathBuf::from("runs/train/model"),
            out: PathBuf::from("runs/eval"),
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct DataEfficiencyConfig {
    /// Training-set sizes, ascending.
    pub sweep: Vec<usize>,
    pub n_test: usize,
    /// Optional pre-generated 1D Poisson dataset; generated when absent.
    pub dataset: Option<PathBuf>,
    pub model: ModelConfig,
    pub train: TrainConfig,
    pub seed: u64,
    pub out: PathBuf,
}

impl Default for DataEfficiencyConfig {
    fn default() -> Self {
        Self {
            sweep: vec![10, 32, 100, 316, 1000],
            n_test: 200,
            dataset: None,
            model: ModelConfig::default(),
            train: TrainConfig {
                epochs: 500,
                ..TrainConfig::default()
            },
            seed: 1,
            out: PathBuf::from("runs/data_efficiency"),
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ExactRecoveryConfig {
    pub dim: usize,
    pub levels: usize,
    /// Rank of the ground-truth operator (the model uses the same).
    pub rank: usize,
    /// Stacked layers of the trained model.
    pub layers: usize,
    /// Train size; 0 means `20 * layers * rank`.
    pub n_train: usize,
    /// Under-determined control train size.
    pub n_control: usize,
    pub n_test: usize,
    pub lambda: f64,
    pub epochs: usize,
    pub peak_lr: f64,
    pub min_lr: f64,
    pub seed: u64,
    pub out: PathBuf,
}

impl Default for ExactRecoveryConfig {
    fn default() -> Self {
        Self {
            dim: 32,
            levels: 2,
            rank: 2,
            layers: 1,
            n_train: 0,
            n_control: 2,
            n_test: 256,
            lambda: 1.0,
            epochs: 30_000,
            peak_lr: 1e-2,
            min_lr: 1e-8,
            seed: 7,
            out: PathBuf::from("runs/exact_recovery"),
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct KernelRankConfig {
    /// Discretization size.
    pub n: usize,
    pub tree_depth: usize,
    pub eta: f64,
    /// "log" (log|z|) or "inverse" (1/|z|).
    pub kernel: String,
    pub eps: Vec<f64>,
    /// "partition" (maximal admissible blocks of the hierarchical partition)
    /// or "all_same_level" (every admissible same-level pair).
    pub pairs: String,
    pub out: PathBuf,
}

impl Default for KernelRankConfig {
    fn default() -> Self {
        Self {
            n: 512,
            tree_depth: 4,
            eta: 1.0,
            kernel: "log".to_string(),
            eps: vec![1e-2, 1e-4, 1e-6, 1e-8],
            pairs: "partition".to_string(),
            out: PathBuf::from("runs/kernel_rank"),
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct BenchConfig {
    pub sizes: Vec<usize>,
    pub rank: usize,
    pub reps: usize,
    pub seed: u64,
    pub out: PathBuf,
}

impl Default for BenchConfig {
    fn default() -> Self {
        Self {
            sizes: vec![256, 1024, 4096, 16384],
            rank: 2,
            reps: 20,
            seed: 1,
            out: PathBuf::from("runs/bench_matvec"),
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct PlotConfig {
    pub input: PathBuf,
    pub output: PathBuf,
    pub log_x: bool,
    pub log_y: bool,
    pub title: String,
    pub x_label: String,
    pub y_label: String,
}

impl Default for PlotConfig {
    fn default() -> Self {
        Self {
            input: PathBuf::from("data.csv"),
            output: PathBuf::from("plot.svg"),
            log_x: false,
            log_y: false,
            title: String::new(),
            x_label: String::new(),
            y_label: String::new(),
        }
    }
}
