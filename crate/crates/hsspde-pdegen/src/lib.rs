//! Synthetic PDE dataset generation with per-sample derived seeds, exact
//! residual/analytic oracles, and a bit-exact on-disk format.

pub mod banded;
pub mod burgers;
pub mod dataset;
pub mod error;
pub mod heat;
pub mod poisson1d;
pub mod poisson2d;
pub mod recovery;

pub use banded::{solve_tridiagonal, BandedLu, BandedMatrix};
pub use burgers::gen_burgers_1d;
pub use dataset::{
    downsample, load, save_steady, save_trajectory, Dataset, DatasetMeta, GridMeta,
    LoadedDataset, TrajectoryDataset,
};
pub use error::{PdegenError, Result};
pub use heat::gen_heat_1d;
pub use poisson1d::gen_poisson_1d;
pub use poisson2d::gen_poisson_2d;
pub use recovery::gen_hss_recovery;
