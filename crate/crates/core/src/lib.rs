#![no_std]
//! Simulation engine for a loop-based optical processor that applies
//! sequential measurement-induced squeezing gates to non-Gaussian states.
//!
//! The crate is `no_std` (it needs `alloc`) and contains only numerics:
//! truncated Fock-basis states and channels, a covariance-matrix oracle,
//! state sources, the gate engine, homodyne tomography, temporal-mode fitting
//! and the loop control scheduler. File formats and the command line live in
//! the companion `cvloop` crate.

extern crate alloc;

pub mod error;
pub mod fock;
pub mod gate;
pub mod gaussian;
pub mod linalg;
pub mod math;
pub mod optimize;
pub mod scalability;
pub mod scheduler;
pub mod sources;
pub mod temporal;
pub mod tomography;

pub use error::{Error, Result};
pub use fock::FockState;
pub use gate::{GateProgram, GateStep, LossScenario, Variant};
pub use gaussian::GaussianState;
pub use sources::{AncillaSpec, CatSpec, Quadrature};
