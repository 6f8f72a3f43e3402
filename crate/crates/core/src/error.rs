use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("constellation order {0} is not a power of two >= 4")]
    InvalidOrder(usize),
    #[error("bit-word has {got} bits, constellation expects {expected}")]
    BitLength { expected: usize, got: usize },
    #[error("symbol index {index} out of range 1..={order}")]
    IndexOutOfRange { index: usize, order: usize },
    #[error("invalid parameter `{name}`: {reason}")]
    InvalidParameter { name: &'static str, reason: String },
    #[error("quadrature did not converge: estimate {estimate:e}, error {error:e}")]
    QuadratureNonConvergence { estimate: f64, error: f64 },
    #[error("binomial coefficient overflow for n = {0}")]
    BinomialOverflow(u64),
    #[error("not enough reliable points in window ({found} found, 2 required)")]
    InsufficientPoints { found: usize },
}

pub(crate) fn invalid(name: &'static str, reason: impl Into<String>) -> Error {
    Error::InvalidParameter {
        name,
        reason: reason.into(),
    }
}
