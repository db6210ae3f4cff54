use thiserror::Error;

/// Errors raised by the hydroalpha operators.
#[derive(Debug, Error)]
pub enum Error {
    /// Invalid argument, shape or configuration value.
    #[error("parameter error: {0}")]
    Parameter(String),
    /// Numerical failure: non-finite values, failed factorization, rank loss.
    #[error("numeric error: {0}")]
    Numeric(String),
    /// A mathematical precondition of the model does not hold.
    #[error("precondition violated: {0}")]
    Precondition(String),
    /// Analytic weight requested at or beyond the exhausted band.
    #[error("analytic band exhausted (T* reached): a - lambda*theta = {0:e}")]
    BandExhausted(f64),
    #[error("malformed snapshot: {0}")]
    Format(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn param<T>(msg: impl Into<String>) -> Result<T> {
    Err(Error::Parameter(msg.into()))
}
