use thiserror::Error;

/// Errors raised by the numerical routines of this crate.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum VflError {
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("kernel is singular at t = 0")]
    SingularAtZero,

    #[error("t = {t} outside tabulated range [0, {t_max}]")]
    OutOfRange { t: f64, t_max: f64 },

    #[error("operation not supported: {0}")]
    Unsupported(String),

    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },

    #[error("tolerance not met: estimated error {achieved:e} > tol {tol:e}")]
    ToleranceNotMet { achieved: f64, tol: f64 },

    #[error("tabulated kernel appears unbounded near t = 0")]
    SingularKernelOnTabulated,

    #[error("squared resolvent is not integrable on [0, inf) (fitted decay rate {rate:e})")]
    NonIntegrable { rate: f64 },

    #[error("evaluation strategies disagree by {discrepancy:e} at z = {z}")]
    AccuracyLoss { z: f64, discrepancy: f64 },

    #[error("series does not converge reliably at z = {z}")]
    SeriesDivergence { z: f64 },

    #[error("quadrature did not stabilise: {0}")]
    QuadratureStall(String),

    #[error("negative covariance coefficient {value} at mode {mode}")]
    NegativeCoefficient { mode: String, value: f64 },

    #[error("grid size M = {m} does not exceed 2N = {two_n}")]
    AliasingRisk { m: usize, two_n: usize },

    #[error("limit not detected: {0}")]
    LimitNotDetected(String),

    #[error("insufficient data: {0}")]
    InsufficientData(String),

    #[error("resolvent tail does not decay at lambda = {witness}")]
    TailNonDecaying { witness: f64 },

    #[error("malformed data: {0}")]
    Format(String),

    #[error("i/o: {0}")]
    Io(String),
}

impl From<std::io::Error> for VflError {
    fn from(e: std::io::Error) -> Self {
        VflError::Io(e.to_string())
    }
}

pub type Result<T> = std::result::Result<T, VflError>;

pub(crate) fn invalid(msg: impl Into<String>) -> VflError {
    VflError::InvalidParameter(msg.into())
}
