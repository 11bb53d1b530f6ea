use thiserror::Error;

/// Errors raised by the library. Numerical degeneracy that has a well-defined
/// answer (rank deficiency, empty sums) is not an error.
#[derive(Debug, Error)]
pub enum Error {
    #[error("dimension mismatch in {context}: expected {expected}, found {found}")]
    DimensionMismatch {
        context: &'static str,
        expected: String,
        found: String,
    },
    #[error("matrix is not symmetric (max |M - M^T| = {asymmetry:e})")]
    NotSymmetric { asymmetry: f64 },
    #[error("matrix is not positive semidefinite (smallest eigenvalue {min_eigenvalue:e})")]
    NotPsd { min_eigenvalue: f64 },
    #[error("non-finite value in {0}")]
    NonFinite(&'static str),
    #[error("invalid argument: {0}")]
    InvalidArgument(String),
    #[error("pathway index {index} out of range at layer {layer} (width {width})")]
    PathwayOutOfRange {
        layer: usize,
        index: usize,
        width: usize,
    },
    #[error("pathway set has {count} elements, above the enumeration cap of {cap}")]
    PathwayCapExceeded { count: u128, cap: usize },
    #[error("cluster {0} has no tasks")]
    EmptyCluster(usize),
    #[error("task {0} has no samples")]
    EmptyTask(usize),
    #[error("operation requires a {expected} solution, got {found}")]
    WrongMethod { expected: String, found: String },
    #[error("assumption unmet: {0}")]
    AssumptionUnmet(String),
    #[error("config error at line {line}: {message}")]
    Config { line: usize, message: String },
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn invalid(msg: impl Into<String>) -> Error {
    Error::InvalidArgument(msg.into())
}
