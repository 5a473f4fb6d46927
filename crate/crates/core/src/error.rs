//! Error type shared by every module of the crate.

use thiserror::Error;

pub type Result<T> = std::result::Result<T, CalibError>;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum CalibError {
    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),
    #[error("label {label} out of range for {k} classes (row {row})")]
    LabelOutOfRange { row: usize, label: usize, k: usize },
    #[error("non-finite value at row {row}, column {col}")]
    NonFinite { row: usize, col: usize },
    #[error("probability row {row} sums to {sum}, not 1 within 1e-6")]
    NotNormalized { row: usize, sum: f64 },
    #[error("probability row {row} disagrees with softmax of its logits")]
    LogitsProbsMismatch { row: usize },
    #[error("need at least 2 classes, got {0}")]
    TooFewClasses(usize),
    #[error("bin count must be at least 1")]
    InvalidBinCount,
    #[error("confidence {0} outside [0, 1]")]
    OutOfRange(f64),
    #[error("class {class} out of range for {k} classes")]
    ClassOutOfRange { class: usize, k: usize },
    #[error("all bins are empty")]
    AllBinsEmpty,
    #[error("empty input")]
    EmptyInput,
    #[error("weight at index {0} is not positive")]
    NonPositiveWeight(usize),
    #[error("calibration map expects {map_k} classes, input has {input_k}")]
    ClassCountMismatch { map_k: usize, input_k: usize },
    #[error("prediction set carries no logits")]
    MissingLogits,
    #[error("length mismatch: {left} vs {right}")]
    LengthMismatch { left: usize, right: usize },
    #[error("smoothing degree {0} outside [0, 1]")]
    AlphaOutOfRange(f64),
    #[error("focusing parameter gamma {0} is negative")]
    NegativeGamma(f64),
    #[error("invalid synthetic config: {0}")]
    InvalidConfig(String),
    #[error("malformed calibration map file: {0}")]
    MalformedMap(String),
}
