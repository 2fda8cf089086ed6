use thiserror::Error;

#[derive(Debug, Error)]
pub enum NeuralError {
    #[error("{context}: expected shape {expected:?}, got {actual:?}")]
    ShapeMismatch {
        context: &'static str,
        expected: Vec<usize>,
        actual: Vec<usize>,
    },

    #[error("{context}: expected {expected} entries, got {actual}")]
    LengthMismatch {
        context: &'static str,
        expected: usize,
        actual: usize,
    },

    #[error("mode index {mode} out of range for tensor of rank {rank}")]
    BadMode { mode: usize, rank: usize },

    #[error("tape does not match this layer (recorded {recorded}, needed {needed})")]
    StaleTape { recorded: usize, needed: usize },

    #[error(transparent)]
    Core(#[from] hsspde_core::CoreError),

    #[error("model i/o: {0}")]
    Io(#[from] std::io::Error),

    #[error("model manifest: {0}")]
    Manifest(String),
}

pub type Result<T> = std::result::Result<T, NeuralError>;
