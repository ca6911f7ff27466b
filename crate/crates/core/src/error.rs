use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("invalid parameters: {}", .0.join("; "))]
    InvalidParameters(Vec<String>),

    /// An argument lies outside the region where a formula is defined, for
    /// example a transform evaluated left of its abscissa of convergence.
    #[error("domain error: {0}")]
    Domain(String),

    #[error("numerical failure: {message} (residual {residual:.3e})")]
    Numeric { message: String, residual: f64 },
}

pub type Result<T> = std::result::Result<T, Error>;

impl Error {
    pub(crate) fn domain(msg: impl Into<String>) -> Self {
        Error::Domain(msg.into())
    }

    pub(crate) fn numeric(msg: impl Into<String>, residual: f64) -> Self {
        Error::Numeric { message: msg.into(), residual }
    }
}
