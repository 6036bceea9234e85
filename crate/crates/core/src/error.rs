use thiserror::Error;

/// Errors produced anywhere in the library.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },

    #[error("matrix is not unitary (max deviation {deviation:.3e})")]
    NonUnitaryInput { deviation: f64 },

    #[error("channel is not trace preserving (max deviation {deviation:.3e})")]
    NotTracePreserving { deviation: f64 },

    #[error("invalid state: {0}")]
    InvalidState(String),

    #[error("invalid effect: {0}")]
    InvalidEffect(String),

    #[error("unsupported qubit count {n}: {reason}")]
    UnsupportedDimension { n: usize, reason: &'static str },

    #[error("{name} = {value} is out of range: {range}")]
    OutOfRange {
        name: &'static str,
        value: f64,
        range: String,
    },

    #[error("invalid probability distribution: {0}")]
    InvalidDistribution(String),

    #[error("unphysical parameters: {0}")]
    UnphysicalParameters(String),

    #[error("insufficient data: need at least {needed} distinct sequence lengths, got {got}")]
    InsufficientData { needed: usize, got: usize },

    #[error("raw per-sequence survivals were not retained")]
    MissingRawData,

    #[error("depolarizing parameter {p} is below the numerical floor {floor}")]
    DivisionByZero { p: f64, floor: f64 },

    #[error("invalid configuration: {0}")]
    InvalidConfig(String),

    #[error("parse error: {0}")]
    Parse(String),

    #[error("io error: {0}")]
    Io(String),
}

impl From<std::io::Error> for Error {
    fn from(e: std::io::Error) -> Self {
        Error::Io(e.to_string())
    }
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
