use thiserror::Error;

/// Errors raised by the numerical laboratory.
///
/// The variants split into validation failures (bad parameters, points outside a
/// domain, scale factors that do not map nodes to nodes) and numeric failures
/// (non-convergence, CFL violations). The CLI maps the former to exit status 2
/// and the latter to exit status 3.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("invalid parameter: {0}")]
    Invalid(String),

    #[error("domain error: {0}")]
    Domain(String),

    #[error("scale factors do not map grid nodes to grid nodes: {0}")]
    NotNodePreserving(String),

    #[error("numeric error: {0}")]
    Numeric(String),

    #[error("CFL violation: requested dt = {requested:e}, admissible dt = {admissible:e}")]
    Cfl { requested: f64, admissible: f64 },
}

impl Error {
    pub(crate) fn invalid(msg: impl Into<String>) -> Self {
        Error::Invalid(msg.into())
    }

    pub(crate) fn domain(msg: impl Into<String>) -> Self {
        Error::Domain(msg.into())
    }

    pub(crate) fn numeric(msg: impl Into<String>) -> Self {
        Error::Numeric(msg.into())
    }

    /// True for failures caused by the caller's input rather than by the computation.
    pub fn is_validation(&self) -> bool {
        matches!(
            self,
            Error::Invalid(_) | Error::Domain(_) | Error::NotNodePreserving(_)
        )
    }
}

pub type Result<T> = std::result::Result<T, Error>;
