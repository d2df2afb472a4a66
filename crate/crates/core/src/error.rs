use thiserror::Error;

/// Errors raised by the state, measurement and protocol layers.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("matrix is not Hermitian (max |m - m†| = {deviation:e})")]
    NotHermitian { deviation: f64 },

    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: String, found: String },

    #[error("invalid state: {0}")]
    InvalidState(String),

    #[error("parameter `{name}` = {value} is outside {range}")]
    InvalidParameter {
        name: &'static str,
        value: f64,
        range: &'static str,
    },

    #[error("requested outcome has probability {probability:e}")]
    ZeroProbabilityOutcome { probability: f64 },

    #[error("state is already maximally entangled")]
    AlreadyMaximal,

    #[error("Schmidt ordering violated: requires beta >= alpha (alpha = {alpha}, beta = {beta})")]
    OrderingViolation { alpha: f64, beta: f64 },

    #[error("no separable state accepted for A_s,z = {a_sz} after {rejections} rejections")]
    RejectionBudgetExceeded { a_sz: f64, rejections: u64 },
}

pub type Result<T, E = Error> = std::result::Result<T, E>;

pub(crate) fn check_range(
    name: &'static str,
    value: f64,
    lo: f64,
    hi: f64,
    range: &'static str,
) -> Result<f64> {
    if value.is_finite() && value >= lo && value <= hi {
        Ok(value)
    } else {
        Err(Error::InvalidParameter { name, value, range })
    }
}
