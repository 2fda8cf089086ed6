//! Structured linear algebra for hierarchically semi-separable (HSS) operators.
//!
//! An HSS matrix stores a `d x d` operator through a telescopic decomposition
//! over a balanced cluster tree: dense diagonal blocks at the leaves, low-rank
//! couplings between siblings, and a nested basis across levels. Storage and
//! matrix-vector products both cost `O(d * rank)` instead of `O(d^2)`.
//!
//! The numeric kernels are generic over the scalar type (any [`Scalar`], in
//! practice `f32` or `f64`); the crate root exports double-precision aliases
//! which the rest of the workspace uses.

pub mod dense;
pub mod error;
pub mod hss;
pub mod rank;
pub mod scalar;
pub mod seed;
pub mod svd;
pub mod tree;

pub use dense::DenseMatrix;
pub use error::CoreError;
pub use hss::{HssMatrix, MatvecTrace};
pub use rank::epsilon_rank;
pub use scalar::Scalar;
pub use tree::ClusterTree;

/// Double-precision dense matrix, the default throughout the workspace.
pub type Mat = DenseMatrix<f64>;
/// Double-precision HSS matrix.
pub type Hss = HssMatrix<f64>;

/// Crate-wide result type.
pub type Result<T> = std::result::Result<T, CoreError>;
