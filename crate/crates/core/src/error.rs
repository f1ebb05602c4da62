use thiserror::Error;

/// Errors raised by the numerical kernels.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    /// Argument outside the mathematical domain of the function.
    #[error("domain error: {0}")]
    Domain(String),

    /// Result not representable; the message names the scaled alternative.
    #[error("range error: {0}")]
    Range(String),

    #[error("invalid mode specification: {0}")]
    InvalidSpec(String),

    /// Field does not fit the sampling grid.
    #[error("geometry error: {0}")]
    Geometry(String),

    #[error("aliasing error: {0}")]
    Aliasing(String),

    /// Integration or sampling too coarse for the integrand.
    #[error("resolution error: {0}")]
    Resolution(String),

    /// Lookup outside the sampled extent of a field.
    #[error("extent error: {0}")]
    Extent(String),

    #[error("plane mismatch: expected {expected}, found {found}")]
    PlaneMismatch {
        expected: &'static str,
        found: &'static str,
    },

    #[error("shape error: {0}")]
    Shape(String),

    #[error("precondition violated: {0}")]
    Precondition(String),

    #[error("truncation error: {0}")]
    Truncation(String),

    #[error("degenerate state: {0}")]
    DegenerateState(String),

    #[error("undefined ratio: {0}")]
    UndefinedRatio(String),

    #[error("io error: {0}")]
    Io(String),
}

impl From<std::io::Error> for Error {
    fn from(e: std::io::Error) -> Self {
        Error::Io(e.to_string())
    }
}

pub type Result<T> = std::result::Result<T, Error>;
