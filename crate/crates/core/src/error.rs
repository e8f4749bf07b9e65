use alloc::string::String;

/// Errors raised by the simulation engine.
#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum Error {
    #[error("cutoff must be at least 2, got {0}")]
    CutoffTooSmall(usize),

    #[error("expected {expected} mode(s), state has {actual}")]
    ModeCount { expected: usize, actual: usize },

    #[error("mode index {index} out of range for a {modes}-mode state")]
    ModeIndex { index: usize, modes: usize },

    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),

    #[error("parameter `{name}` = {value} outside {range}")]
    OutOfRange {
        name: &'static str,
        value: f64,
        range: &'static str,
    },

    #[error("state is not positive semidefinite (smallest eigenvalue {0:e})")]
    NotPsd(f64),

    #[error("herald probability {0:e} is numerically zero")]
    EmptyHerald(f64),

    #[error("outcome integration did not converge (trace-norm change {0:e})")]
    QuadratureNonConvergence(f64),

    #[error("degenerate beam splitter: reflectivity {0} must lie strictly inside (0, 1)")]
    DegenerateGate(f64),

    #[error("invalid program: {0}")]
    InvalidProgram(String),

    #[error("invalid dataset: {0}")]
    InvalidDataset(String),

    #[error("angle set is rank deficient for an ellipse fit ({0} distinct angles)")]
    RankDeficientAngles(usize),

    #[error("time step {dt_ns} ns too coarse for bandwidth {gamma:e} rad/s")]
    CoarseSampling { dt_ns: f64, gamma: f64 },

    #[error("mode bandwidths must differ (gamma1 = gamma2 = {0:e})")]
    DegenerateMode(f64),
}

pub type Result<T> = core::result::Result<T, Error>;
