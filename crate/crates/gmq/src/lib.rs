//! Host side of `gmq-core`: synthetic datasets, mask and model files,
//! benchmarks, evaluation, turntable renders, the posing HTTP service and
//! the `gmq` command line.

pub mod bench;
pub mod cli;
pub mod dataset;
pub mod error;
pub mod eval;
pub mod mask_io;
pub mod model_io;
pub mod render;
pub mod service;
pub mod turntable;

pub use error::{GmqError, Result};
