use thiserror::Error;

/// Errors raised by tree construction and structured-matrix kernels.
#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum CoreError {
    #[error("balanced tree of depth {depth} needs 2^{depth} to divide d = {d}")]
    Indivisible { d: usize, depth: usize },

    #[error("index count must be positive (got d = {d})")]
    EmptyIndexSet { d: usize },

    #[error("rank {rank} exceeds leaf size {leaf} (d = {d}, depth = {depth})")]
    RankExceedsLeaf {
        d: usize,
        depth: usize,
        rank: usize,
        leaf: usize,
    },

    #[error("rank must be at least 1")]
    ZeroRank,

    #[error("{context}: expected length {expected}, got {actual}")]
    LengthMismatch {
        context: &'static str,
        expected: usize,
        actual: usize,
    },

    #[error("{context}: expected {expected_rows}x{expected_cols}, got {rows}x{cols}")]
    ShapeMismatch {
        context: &'static str,
        expected_rows: usize,
        expected_cols: usize,
        rows: usize,
        cols: usize,
    },

    #[error("matrix must be square, got {rows}x{cols}")]
    NotSquare { rows: usize, cols: usize },
}
