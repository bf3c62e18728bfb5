use thiserror::Error;

/// Errors raised by the library.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    /// Parameters outside the chart or parametrization domain.
    #[error("domain error: {0}")]
    Domain(String),
    /// Point farther from the manifold than the reach bound.
    #[error("out of reach: distance {distance} >= reach bound {reach}")]
    OutOfReach { distance: f64, reach: f64 },
    /// A caller-side precondition was violated.
    #[error("contract violation: {0}")]
    Contract(String),
    /// A Poisson cloud came back empty.
    #[error("empty point cloud")]
    EmptyCloud,
    /// Rejection sampling accepts too rarely for the configured geometry.
    #[error("geometry misconfiguration: {0}")]
    Misconfiguration(String),
    /// An iterative solver failed to converge or certify.
    #[error("solver failure: {0}")]
    Solver(String),
    /// Malformed serialized input.
    #[error("parse error: {0}")]
    Parse(String),
}

pub type Result<T> = std::result::Result<T, Error>;
