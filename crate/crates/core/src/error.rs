use thiserror::Error;

use crate::linalg::LinalgError;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error(transparent)]
    Linalg(#[from] LinalgError),

    /// Caller broke a documented precondition (shapes, sizes, signs).
    #[error("contract violation: {0}")]
    Contract(String),

    #[error("unknown problem `{name}`; available problems: {available}")]
    UnknownProblem { name: String, available: String },

    #[error("kernel {family} does not support {what}")]
    UnsupportedKernel { family: &'static str, what: String },

    #[error("degenerate geometry: {0}")]
    DegenerateGeometry(String),

    #[error("preconditioning failed after {attempts} Cholesky attempts (last tau = {tau:e})")]
    PreconditionFailed { attempts: usize, tau: f64 },

    #[error("ratio estimate is ill-conditioned: denominator {value:e} within 3 standard errors ({stderr:e}) of zero")]
    IllConditionedRatio { value: f64, stderr: f64 },

    #[error("non-finite value encountered: {0}")]
    NonFinite(String),

    #[error("invalid configuration: {0}")]
    Config(String),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;

pub(crate) fn contract<T>(msg: impl Into<String>) -> Result<T> {
    Err(Error::Contract(msg.into()))
}
