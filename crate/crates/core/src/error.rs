use std::path::PathBuf;

use thiserror::Error;

/// Everything that can go wrong across the library.
///
/// Predictor and row indices carried by variants are 1-based. Index 0 in
/// `DegenerateColumn` denotes the response.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("file not found: {0}")]
    MissingFile(PathBuf),
    #[error("cannot parse value at row {row}, column {col}: {msg}")]
    ParseError { row: usize, col: usize, msg: String },
    #[error("non-finite value at row {row}, column {col}")]
    NonFiniteValue { row: usize, col: usize },
    #[error("need at least 3 rows, got {0}")]
    TooFewRows(usize),
    #[error("response column `{0}` not found in header")]
    UnknownColumn(String),
    #[error("malformed sample: {0}")]
    Shape(String),
    #[error("column {0} has zero variance")]
    DegenerateColumn(usize),
    #[error("invalid block size {b} for n = {n}")]
    InvalidBlockSize { n: usize, b: usize },
    #[error("standard error for predictor {0} is not positive")]
    NonPositiveSe(usize),
    #[error("weight for predictor {0} is not positive")]
    NonPositiveWeight(usize),
    #[error("predictor {0} fits the response perfectly (zero residual variance)")]
    ZeroResidualVariance(usize),
    #[error("long-run variance for predictor {0} is not positive")]
    NonPositiveVariance(usize),
    #[error("invalid HAC bandwidth {bandwidth} for n = {n}")]
    InvalidBandwidth { n: usize, bandwidth: usize },
    #[error("design matrix for predictor {0} is singular")]
    SingularDesign(usize),
    #[error("configuration does not fit the sample: {0}")]
    ConfigMismatch(String),
    #[error("invalid configuration: {0}")]
    InvalidConfig(String),
    #[error("resampled predictor stayed constant after {0} redraws")]
    DegenerateResample(usize),
    #[error("need at least {needed} tuning draws, got {got}")]
    InsufficientReps { needed: usize, got: usize },
    #[error("autoregressive coefficient {0} is not stable (|phi| >= 1)")]
    UnstableAr(f64),
    #[error("argument out of domain: {0}")]
    OutOfDomain(String),
    #[error("report table is empty")]
    EmptyTable,
    #[error("estimated memory {needed} bytes exceeds the limit of {limit} bytes")]
    MemoryBound { needed: u64, limit: u64 },
    #[error("I/O error: {0}")]
    Io(String),
}

impl From<std::io::Error> for Error {
    fn from(e: std::io::Error) -> Self {
        Error::Io(e.to_string())
    }
}

impl From<csv::Error> for Error {
    fn from(e: csv::Error) -> Self {
        Error::Io(e.to_string())
    }
}

impl From<serde_json::Error> for Error {
    fn from(e: serde_json::Error) -> Self {
        Error::Io(e.to_string())
    }
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
