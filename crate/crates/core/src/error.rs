use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("parse error at line {line}: {reason}")]
    ParseLine { line: usize, reason: String },

    #[error("count contract violated: {behavior} sum {b_sum} exceeds examine sum {e_sum}")]
    CountExceedsExamines {
        behavior: String,
        b_sum: u64,
        e_sum: u64,
    },

    #[error("query {0} has no vertical label")]
    UnlabeledQuery(String),

    #[error("unknown feature name: {0}")]
    UnknownFeature(String),

    #[error("invalid parameter: {0}")]
    InvalidParam(String),

    #[error("feature vector length {got} does not match model feature count {expected}")]
    FeatureLengthMismatch { got: usize, expected: usize },

    #[error("model format error at {path}: {reason}")]
    ModelFormat { path: String, reason: String },

    #[error("dataset error: {0}")]
    Dataset(String),

    #[error("event dated {got} where {expected} was required")]
    WrongDay {
        got: chrono::NaiveDate,
        expected: chrono::NaiveDate,
    },

    #[error("label window [{label_start}, {label_end}] overlaps feature window ending {feature_end}")]
    LabelLeakage {
        feature_end: chrono::NaiveDate,
        label_start: chrono::NaiveDate,
        label_end: chrono::NaiveDate,
    },

    #[error("rankings cover different candidate sets")]
    CandidateMismatch,

    #[error("experiment error: {0}")]
    Experiment(String),

    #[error("io error: {0}")]
    Io(#[from] std::io::Error),

    #[error("json error: {0}")]
    Json(#[from] serde_json::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
