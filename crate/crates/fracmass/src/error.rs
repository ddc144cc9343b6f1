use thiserror::Error;

/// Errors raised by the numerical routines and the input validators.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },

    #[error("unsupported dimension {0}; supported: 1, 2, 3")]
    UnsupportedDimension(usize),

    #[error("invalid region: {0}")]
    InvalidRegion(String),

    #[error("invalid field: {0}")]
    InvalidField(String),

    #[error("region is unbounded and no bounding clip was supplied")]
    Unbounded,

    #[error("point is not inside the region")]
    PointOutside,

    #[error("s out of (0,1)")]
    SOutOfRange,

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("quadrature did not converge: {0}")]
    NonConvergent(String),

    #[error("no effective samples")]
    NoSamples,

    #[error("non-finite sample value")]
    NonFinite,

    #[error("tail model is unknown: {0}")]
    UnknownTail(String),

    #[error("odd exponent p = {0}: the alternating binomial formula does not hold")]
    OddExponent(u32),

    #[error("divergent tail: {0}")]
    DivergentTail(String),
}

pub type Result<T> = std::result::Result<T, Error>;

/// Rejects `s` outside the open unit interval.
pub fn check_s(s: f64) -> Result<()> {
    if s > 0.0 && s < 1.0 {
        Ok(())
    } else {
        Err(Error::SOutOfRange)
    }
}

/// Rejects dimensions other than 1, 2, 3.
pub fn check_dim(d: usize) -> Result<()> {
    if (1..=3).contains(&d) {
        Ok(())
    } else {
        Err(Error::UnsupportedDimension(d))
    }
}
