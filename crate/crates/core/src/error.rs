use thiserror::Error;

/// Failures of the geometric layer.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum GeometryError {
    #[error("usage error: {0}")]
    Usage(String),
    #[error("non-finite coordinate in {0:?}")]
    NonFinite(Vec<f64>),
    #[error("point {coords:?} lies outside the domain of {space}")]
    OutOfDomain {
        space: &'static str,
        coords: Vec<f64>,
    },
    #[error("logarithm of coincident points is undefined")]
    DegenerateLog,
    #[error("degenerate input: {0}")]
    Degenerate(&'static str),
    #[error("distance {distance} is not below the injectivity radius {injectivity_radius}")]
    OutOfInjectivity {
        distance: f64,
        injectivity_radius: f64,
    },
    #[error("geodesic left the working interval at z = {z}")]
    DomainExit { z: f64 },
    #[error("shooting solver did not converge (best residual {residual:e})")]
    SolverNotConverged { residual: f64 },
}

pub type Result<T, E = GeometryError> = std::result::Result<T, E>;
