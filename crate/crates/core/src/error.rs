use thiserror::Error;

/// Errors raised by the numerical modules.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("series did not converge after {terms} terms")]
    NonConvergence { terms: usize },
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),
    #[error("radius {r} lies outside every window")]
    OutsideDomain { r: f64 },
    #[error("no spectral gap: {0}")]
    NoGap(String),
    #[error("iteration did not converge: {0}")]
    NotConverged(String),
    #[error("mass mismatch: {0}")]
    MassMismatch(String),
    #[error("domain error: {0}")]
    DomainError(String),
    #[error("point lies outside the gap (harmonic measure {value})")]
    OutsideGap { value: f64 },
    #[error("bad geometry: {0}")]
    BadGeometry(String),
    #[error("ill-conditioned: {0}")]
    IllConditioned(String),
    #[error("quadrature failed: {0}")]
    QuadratureFailure(String),
    #[error("index {j} is outside the bifurcation window for n = {n}")]
    RegimeError { j: usize, n: usize },
    #[error("branch tracking failed: {0}")]
    BranchError(String),
    #[error("sampler table error: {0}")]
    TableError(String),
}

pub type Result<T> = std::result::Result<T, Error>;
