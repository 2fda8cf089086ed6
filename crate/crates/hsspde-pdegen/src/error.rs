use thiserror::Error;

#[derive(Debug, Error)]
pub enum PdegenError {
    #[error("{context}")]
    Shape { context: String },

    #[error("linear system singular at column {column}")]
    SingularSystem { column: usize },

    #[error("Newton iteration failed to converge on trajectory {trajectory} (step {step}, residual {residual:e})")]
    NewtonDiverged {
        trajectory: usize,
        step: usize,
        residual: f64,
    },

    #[error("dataset manifest: {0}")]
    Manifest(String),

    #[error("tensor '{name}': file holds {actual} bytes, manifest shape {shape:?} needs {expected}")]
    TensorSizeMismatch {
        name: String,
        shape: Vec<usize>,
        expected: usize,
        actual: usize,
    },

    #[error("missing dataset file: {0}")]
    MissingFile(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Neural(#[from] hsspde_neural::NeuralError),

    #[error(transparent)]
    Core(#[from] hsspde_core::CoreError),
}

pub type Result<T> = std::result::Result<T, PdegenError>;
