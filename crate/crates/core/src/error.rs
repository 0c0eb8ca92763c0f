use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("unsupported fiber dimension {0} (expected 2 or 3)")]
    UnsupportedDimension(usize),
    #[error("dimension mismatch: {0} vs {1}")]
    DimensionMismatch(usize, usize),
    #[error("base tensor is degenerate (min eigenvalue {min_eig:e} <= {eps:e})")]
    DegenerateBase { min_eig: f64, eps: f64 },
    #[error("tensor is not positive semi-definite (min eigenvalue {0:e})")]
    NotPsd(f64),
    #[error("tensor entries must be finite")]
    NonFinite,
    #[error("invalid path: {0}")]
    InvalidPath(String),
    #[error("invalid grid: {0}")]
    InvalidGrid(String),
    #[error("fields live on different domains")]
    DomainMismatch,
    #[error("shape mismatch: expected {expected} entries, got {got}")]
    ShapeMismatch { expected: usize, got: usize },
    #[error("value outside the admissible domain: {0}")]
    Domain(String),
    #[error("resolution too coarse: {0}")]
    UnderResolved(String),
    #[error("sequence error: {0}")]
    Sequence(String),
    #[error("field file: {0}")]
    Format(String),
    #[error("i/o: {0}")]
    Io(String),
}

impl From<std::io::Error> for Error {
    fn from(e: std::io::Error) -> Self {
        Error::Io(e.to_string())
    }
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
