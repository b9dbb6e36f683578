//! Ground-truth generators and datasets.

mod benchmark;
mod dataset;
pub mod fhn;

pub use benchmark::{sample_parameters, BenchmarkOperator, ParamBox, SamplingScheme};
pub use dataset::{Dataset, Split};
pub use fhn::{fhn_dataset, fhn_solve, FHNConfig, Trajectory};
