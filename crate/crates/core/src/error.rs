use thiserror::Error;

use crate::registry::FnId;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },

    #[error("degenerate test function: {0}")]
    Degenerate(String),

    #[error("mass-shell quadrature mismatch: {0}")]
    QuadratureMismatch(String),

    #[error("unregistered test function id {0:?}")]
    Unregistered(FnId),

    #[error("combinatorial guard: n = {n} exceeds limit {limit}")]
    TooLarge { n: usize, limit: usize },

    #[error("empty single-particle basis after null-mode removal")]
    EmptyBasis,

    #[error("function {id:?} lies outside the modelled subspace (relative residual {residual:.3e})")]
    OutsideSubspace { id: FnId, residual: f64 },

    #[error("operation not supported: {0}")]
    Unsupported(String),

    #[error("geometry precondition violated: {0}")]
    Geometry(String),

    #[error("operands belong to different Fock specs")]
    SpecMismatch,

    #[error("independent evaluations disagree: {0}")]
    Inconsistent(String),
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn invalid(msg: impl Into<String>) -> Error {
    Error::InvalidParameter(msg.into())
}
