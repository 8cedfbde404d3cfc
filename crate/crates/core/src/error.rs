use thiserror::Error;

/// Errors produced by the analysis routines.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },

    #[error("empty input: {0}")]
    Empty(&'static str),

    #[error("non-finite value in {0}")]
    NonFinite(&'static str),

    #[error("matrix is not symmetric (max asymmetry {0:e})")]
    NotSymmetric(f64),

    #[error("matrix is not positive semidefinite (min eigenvalue {0:e})")]
    NotPositiveSemidefinite(f64),

    #[error("eigendecomposition did not converge within {0} sweeps")]
    NoConvergence(usize),

    #[error("projection collapsed to the zero vector")]
    DegenerateProjection,

    #[error("projection norm {0} exceeds the unit ball")]
    OutsideUnitBall(f64),

    #[error("invalid parameter: {0}")]
    InvalidParameter(&'static str),

    #[error("fold holds {0} samples of a group, at least 2 are required")]
    FoldTooSmall(usize),

    #[error("objective became non-finite at iteration {0}; reduce the step sizes")]
    Diverged(usize),

    #[error("exact transport needs {0} replicated points, above the supported limit")]
    TransportTooLarge(usize),
}

pub type Result<T> = core::result::Result<T, Error>;
