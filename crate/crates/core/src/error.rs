use thiserror::Error;

/// Errors raised by the phase-space library.
#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid grid: {0}")]
    InvalidGrid(String),

    #[error("grid mismatch: {0}")]
    GridMismatch(&'static str),

    #[error("invalid parameter `{name}`: {reason}")]
    InvalidParameter { name: &'static str, reason: String },

    #[error("state does not fit the grid: boundary mass {mass:.3e} exceeds {limit:.1e}")]
    BoundaryMass { mass: f64, limit: f64 },

    #[error(
        "state is too wide for the grid: coherence at half the box length is {amplitude:.3e} \
         (limit {limit:.1e}); widen the grid"
    )]
    CoherenceWidth { amplitude: f64, limit: f64 },

    #[error("non-finite value in {0}")]
    NonFinite(&'static str),

    #[error("covariance matrix is not positive definite (det = {det:.3e})")]
    NotPositiveDefinite { det: f64 },

    #[error("field has negative values (min = {min:.3e}); classical states must be non-negative")]
    NegativeDistribution { min: f64 },

    #[error("eigenvector {index} failed to converge after {iterations} inverse iterations")]
    EigenConvergence { index: usize, iterations: usize },

    #[error(
        "energy {e_star} lies beyond the captured spectrum (highest complete level {e_max}); \
         recompute the spectrum with more eigenpairs"
    )]
    TruncationBudget { e_star: f64, e_max: f64 },

    #[error("state is not an eigenstate: residual {residual:.3e} exceeds {limit:.1e}")]
    NotEigenstate { residual: f64, limit: f64 },

    #[error("wave packet reached the grid boundary at t = {time}: edge mass {mass:.3e}")]
    BoundaryReached { time: f64, mass: f64 },

    #[error("empty energy shell: no grid cell lies within {width} of E = {energy}")]
    EmptyShell { energy: f64, width: f64 },

    #[error("empty E* grid")]
    EmptyScan,

    #[error("index {index} out of range for basis of size {len}")]
    IndexOutOfRange { index: usize, len: usize },

    #[error("malformed field file: {0}")]
    Format(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn invalid(name: &'static str, reason: impl Into<String>) -> Error {
    Error::InvalidParameter {
        name,
        reason: reason.into(),
    }
}
