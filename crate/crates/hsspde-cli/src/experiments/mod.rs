pub mod bench;
pub mod data_efficiency;
pub mod exact_recovery;
pub mod kernel_rank;
