use thiserror::Error;

#[derive(Debug, Error)]
pub enum CliError {
    /// Bad flags, bad config files, unknown equations: exit status 2.
    #[error("usage: {0}")]
    Usage(String),

    #[error("plot: {0}")]
    Plot(String),

    #[error("{0}")]
    Compute(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Core(#[from] hsspde_core::CoreError),

    #[error(transparent)]
    Neural(#[from] hsspde_neural::NeuralError),

    #[error(transparent)]
    Optim(#[from] hsspde_optim::OptimError),

    #[error(transparent)]
    Metrics(#[from] hsspde_metrics::MetricsError),

    #[error(transparent)]
    Pdegen(#[from] hsspde_pdegen::PdegenError),
}

impl CliError {
    /// 0 = success (not represented here), 2 = usage error, 1 = compute
    /// failure.
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Usage(_) => 2,
            _ => 1,
        }
    }
}

pub type Result<T> = std::result::Result<T, CliError>;
