use thiserror::Error;

/// Errors raised by model construction, evaluation and fitting.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum CoriskError {
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },

    #[error("argument out of domain: {0}")]
    OutOfDomain(String),

    #[error("conditioning event has probability zero")]
    ZeroProbabilityEvent,

    #[error("distortion function is not monotone: {0}")]
    NonMonotoneDistortion(String),

    #[error("nonintegrable tail: {0}")]
    NonintegrableTail(String),

    #[error("insufficient excesses: {got} above threshold, need at least {need}")]
    InsufficientExcesses { got: usize, need: usize },

    #[error("numeric failure: {0}")]
    NumericFailure(String),

    #[error("optimizer did not converge: {0}")]
    NonConvergence(String),

    #[error("ratio undefined for nonpositive benchmark ({name} = {value})")]
    NonpositiveBenchmark { name: &'static str, value: f64 },

    #[error("conditioning event too rare for requested n: {n_effective} samples survived, need {need}")]
    RareEvent { n_effective: usize, need: usize },

    #[error("unsupported: {0}")]
    Unsupported(String),

    #[error("input error: {0}")]
    Input(String),

    #[error("validation failed: {0}")]
    Validation(String),
}

impl CoriskError {
    /// Process exit code for the CLI: 2 input error, 3 numeric failure, 4 validation failure.
    pub fn exit_code(&self) -> i32 {
        match self {
            CoriskError::InvalidParameter(_)
            | CoriskError::DimensionMismatch { .. }
            | CoriskError::OutOfDomain(_)
            | CoriskError::InsufficientExcesses { .. }
            | CoriskError::Unsupported(_)
            | CoriskError::Input(_) => 2,
            CoriskError::Validation(_) => 4,
            _ => 3,
        }
    }

    /// Stable machine-readable tag used in CLI error records and FFI error codes.
    pub fn kind(&self) -> &'static str {
        match self {
            CoriskError::InvalidParameter(_) => "invalid_parameter",
            CoriskError::DimensionMismatch { .. } => "dimension_mismatch",
            CoriskError::OutOfDomain(_) => "out_of_domain",
            CoriskError::ZeroProbabilityEvent => "zero_probability_event",
            CoriskError::NonMonotoneDistortion(_) => "non_monotone_distortion",
            CoriskError::NonintegrableTail(_) => "nonintegrable_tail",
            CoriskError::InsufficientExcesses { .. } => "insufficient_excesses",
            CoriskError::NumericFailure(_) => "numeric_failure",
            CoriskError::NonConvergence(_) => "non_convergence",
            CoriskError::NonpositiveBenchmark { .. } => "nonpositive_benchmark",
            CoriskError::RareEvent { .. } => "rare_event",
            CoriskError::Unsupported(_) => "unsupported",
            CoriskError::Input(_) => "input",
            CoriskError::Validation(_) => "validation",
        }
    }
}

pub type Result<T> = std::result::Result<T, CoriskError>;

pub(crate) fn invalid(msg: impl Into<String>) -> CoriskError {
    CoriskError::InvalidParameter(msg.into())
}

pub(crate) fn domain(msg: impl Into<String>) -> CoriskError {
    CoriskError::OutOfDomain(msg.into())
}
