use thiserror::Error;

use crate::solvers::{CuttingPlaneError, LpError, OpNormError, VertexError};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum Error {
    #[error("structural error: {0}")]
    Structural(String),
    #[error("domain error: {0}")]
    Domain(String),
    #[error("unsupported variant: {0}")]
    Unsupported(String),
    #[error("resource limit: {0}")]
    Resource(String),
    #[error("no path: {0}")]
    NoPath(String),
    #[error("solver did not converge: {0}")]
    NonConvergence(String),
}

pub type Result<T> = std::result::Result<T, Error>;

impl Error {
    pub(crate) fn structural(msg: impl Into<String>) -> Self {
        Error::Structural(msg.into())
    }

    pub(crate) fn domain(msg: impl Into<String>) -> Self {
        Error::Domain(msg.into())
    }
}

impl From<LpError> for Error {
    fn from(e: LpError) -> Self {
        Error::NonConvergence(e.to_string())
    }
}

impl From<VertexError> for Error {
    fn from(e: VertexError) -> Self {
        match e {
            VertexError::LimitExceeded { .. } => Error::Resource(e.to_string()),
            _ => Error::Domain(e.to_string()),
        }
    }
}

impl From<CuttingPlaneError> for Error {
    fn from(e: CuttingPlaneError) -> Self {
        match e {
            CuttingPlaneError::Lp(inner) => inner.into(),
            other => Error::Domain(other.to_string()),
        }
    }
}

impl From<OpNormError> for Error {
    fn from(e: OpNormError) -> Self {
        match e {
            OpNormError::Lp(inner) => inner.into(),
            OpNormError::CuttingPlane(inner) => inner.into(),
            OpNormError::Shape => Error::Structural(e.to_string()),
            OpNormError::Infeasible => Error::Domain(e.to_string()),
        }
    }
}
