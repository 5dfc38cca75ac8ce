use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

/// Everything that can go wrong between reading summary statistics and
/// producing an estimate.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("summary values are not monotone: {0}")]
    OrderingViolation(String),

    #[error("unsupported combination of summary statistics: {0}")]
    UnsupportedPattern(String),

    #[error("sample size must be an integer >= 3, got {0}")]
    BadSampleSize(String),

    #[error("{0} is not a finite number")]
    NonFiniteValue(&'static str),

    #[error("{0}; add a constant with --shift so every summary value is positive")]
    NonPositiveSupport(String),

    #[error("invalid distribution parameter: {0}")]
    InvalidParam(String),

    #[error("cannot summarize an empty sample")]
    EmptySample,

    #[error("need at least {needed} points, got {got}")]
    TooFewPoints { needed: usize, got: usize },

    #[error("value {value} lies outside the bounds [{lower}, {upper}]")]
    OutOfBounds { value: f64, lower: f64, upper: f64 },

    #[error("shift {shift} leaves value {value} non-positive")]
    ShiftInsufficient { shift: f64, value: f64 },

    #[error("asked for the best {wanted} candidates but only {available} exist")]
    InsufficientCandidates { wanted: usize, available: usize },

    #[error("invalid configuration: {0}")]
    InvalidConfig(String),

    #[error("run was cancelled")]
    Cancelled,
}

impl Error {
    /// Stable variant name, used in report `error` columns.
    pub fn kind(&self) -> &'static str {
        match self {
            Error::OrderingViolation(_) => "OrderingViolation",
            Error::UnsupportedPattern(_) => "UnsupportedPattern",
            Error::BadSampleSize(_) => "BadSampleSize",
            Error::NonFiniteValue(_) => "NonFiniteValue",
            Error::NonPositiveSupport(_) => "NonPositiveSupport",
            Error::InvalidParam(_) => "InvalidParam",
            Error::EmptySample => "EmptySample",
            Error::TooFewPoints { .. } => "TooFewPoints",
            Error::OutOfBounds { .. } => "OutOfBounds",
            Error::ShiftInsufficient { .. } => "ShiftInsufficient",
            Error::InsufficientCandidates { .. } => "InsufficientCandidates",
            Error::InvalidConfig(_) => "InvalidConfig",
            Error::Cancelled => "Cancelled",
        }
    }

    /// Whether the error stems from user input rather than from the engine.
    pub fn is_validation(&self) -> bool {
        !matches!(
            self,
            Error::InsufficientCandidates { .. } | Error::Cancelled | Error::EmptySample
        )
    }
}
