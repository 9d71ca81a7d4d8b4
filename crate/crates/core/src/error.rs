//! Crate-wide error type.

use thiserror::Error;

/// Errors produced by scenario construction, solvers, and the experiment
/// harness.
#[derive(Debug, Error)]
pub enum Error {
    /// Array construction with fewer than two elements (aperture undefined).
    #[error("array needs at least 2 elements, got {0}")]
    TooFewElements(usize),

    /// User index outside `0..K`.
    #[error("user index {index} out of range for {num_users} users")]
    UserIndexOutOfRange { index: usize, num_users: usize },

    /// A scenario or distribution violated a structural invariant.
    #[error("invalid scenario: {0}")]
    InvalidScenario(String),

    /// Weight pair outside `[0, 1]` or not summing to one.
    #[error("invalid weight pair: comm={comm}, sense={sense}")]
    InvalidWeights { comm: f64, sense: f64 },

    /// Zero channel where a beam direction is required.
    #[error("channel vector is zero; beam direction undefined")]
    ZeroChannel,

    /// Stacked channel matrix is (numerically) rank deficient, so the
    /// zero-forcing directions do not exist.
    #[error("channel matrix is rank deficient; zero-forcing infeasible")]
    RankDeficientChannel,

    /// The power-constraint multiplier search failed to bracket or converge.
    #[error("multiplier search failed after {iterations} iterations (last power residual {residual:.3e})")]
    MultiplierSearch { iterations: usize, residual: f64 },

    /// Invalid experiment configuration (field path in the message).
    #[error("invalid config: {0}")]
    InvalidConfig(String),

    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),

    #[error("JSON error: {0}")]
    Json(#[from] serde_json::Error),

    #[error("CSV error: {0}")]
    Csv(#[from] csv::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
