use thiserror::Error;

/// Construction and indexing errors for [`crate::CadlagPath`].
#[derive(Debug, Clone, PartialEq, Error)]
pub enum PathError {
    #[error("channel length mismatch: expected {expected}, found {found}")]
    LengthMismatch { expected: usize, found: usize },
    #[error("grid times must be strictly increasing and positive (index {index})")]
    NonIncreasingTimes { index: usize },
    #[error("non-finite {what} at index {index}")]
    NonFinite { what: &'static str, index: usize },
    #[error("negative continuous QV increment at index {index}")]
    NegativeQv { index: usize },
    #[error("pure-jump path has a continuous increment at index {index}")]
    ContinuousPartInPureJump { index: usize },
    #[error("interval end {end} outside 1..={steps}")]
    IntervalEndOutOfRange { end: usize, steps: usize },
    #[error("index {index} is at or after the interval end {end}")]
    OutOfInterval { index: usize, end: usize },
    #[error("index {index} beyond the last grid index {steps}")]
    IndexOutOfRange { index: usize, steps: usize },
    #[error("stored values disagree with the channels at index {index}")]
    InconsistentValues { index: usize },
}

/// Errors of the integral calculus.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum CalculusError {
    #[error("integrand is not finite at grid index {index}; the path is not integrable there")]
    NotIntegrable { index: usize },
    #[error("integrand covers {found} steps, path has {expected}")]
    IntegrandLength { expected: usize, found: usize },
}

/// Errors of the exponential / logarithm transforms.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum ExpLogError {
    #[error("phi is undefined at -1")]
    PhiDomain,
    #[error("paths live on different grids")]
    GridMismatch,
    #[error("the path starts at zero; its logarithm lives on an empty interval")]
    EmptyInterval,
}

/// Invalid generator specifications.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum GeneratorError {
    #[error("horizon must be positive and finite, got {0}")]
    Horizon(f64),
    #[error("steps must be at least 1")]
    Steps,
    #[error("{kind} paths cannot be produced in pure-jump mode")]
    ModeUnsupported { kind: &'static str },
    #[error("invalid jump law: {0}")]
    JumpLaw(String),
    #[error("invalid parameter: {0}")]
    Parameter(String),
}

/// Suite configuration errors.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum HarnessError {
    #[error("the rate suite needs at least two mesh levels, got {0}")]
    TooFewMeshLevels(usize),
    #[error("{suite} suite does not support generator kind {kind}")]
    UnsupportedKind { suite: &'static str, kind: &'static str },
    #[error("invalid suite configuration: {0}")]
    Config(String),
    #[error(transparent)]
    Generator(#[from] GeneratorError),
}

/// Reading or writing the path CSV format.
#[derive(Debug, Error)]
pub enum CsvError {
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error("malformed path CSV: {0}")]
    Format(String),
    #[error("path CSV describes an invalid path: {0}")]
    Path(#[from] PathError),
}

impl From<csv::Error> for CsvError {
    fn from(err: csv::Error) -> Self {
        if err.is_io_error() {
            match err.into_kind() {
                csv::ErrorKind::Io(io) => CsvError::Io(io),
                other => CsvError::Format(format!("{other:?}")),
            }
        } else {
            CsvError::Format(err.to_string())
        }
    }
}
