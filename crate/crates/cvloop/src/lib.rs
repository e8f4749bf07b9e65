//! Config-driven experiments for the loop-processor simulator: JSON configs,
//! CSV/JSON outputs and the pipelines behind the `cvloop` binary.
//!
//! Independent programs, tomography subsets and sweep points run on the
//! rayon pool; `RAYON_NUM_THREADS` caps its size.

pub mod config;
pub mod error;
pub mod io;
pub mod runner;

pub use config::ExperimentConfig;
pub use error::{CliError, Result};
