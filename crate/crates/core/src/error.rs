use thiserror::Error;

/// Errors raised by the estimator pipeline.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    /// A caller-supplied argument is outside the supported range.
    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    /// A system matrix was not positive definite, or a pivot vanished.
    #[error("singular operator: {0}")]
    SingularOperator(String),

    /// A norm or interpolant was requested for a time profile it does not accept.
    #[error("profile mismatch: {0}")]
    ProfileMismatch(String),

    /// Patch data does not satisfy the zero-mean condition of an interior vertex.
    #[error("compatibility violated at vertex {vertex}, interval {interval}: mean {mean:e}")]
    Compatibility {
        vertex: usize,
        interval: usize,
        mean: f64,
    },

    /// An internal consistency check failed; this indicates a bug, not bad input.
    #[error("assembly check failed: {0}")]
    Assembly(String),

    /// The data does not have the regularity the requested quantity needs.
    #[error("unsupported data: {0}")]
    UnsupportedData(String),

    /// A reference refinement would exceed the configured size limit.
    #[error("reference refinement too large: {0}")]
    Refinement(String),

    /// The experiment configuration is malformed.
    #[error("config error: {0}")]
    Config(String),

    /// Reading or writing an output file failed.
    #[error("io error: {0}")]
    Io(String),
}

pub type Result<T> = std::result::Result<T, Error>;

impl From<std::io::Error> for Error {
    fn from(e: std::io::Error) -> Self {
        Error::Io(e.to_string())
    }
}
