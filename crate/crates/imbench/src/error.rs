//! Crate-wide error type.

use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("failed to read '{path}': {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },

    #[error("'{path}' is empty")]
    EmptyCsv { path: String },

    #[error("'{path}': no column named '{column}'")]
    MissingColumn { path: String, column: String },

    #[error("'{path}': row {row}, column '{column}': '{value}' is not a finite number")]
    BadCell {
        path: String,
        row: usize,
        column: String,
        value: String,
    },

    #[error("csv parse error in '{path}': {message}")]
    Csv { path: String, message: String },

    #[error("dataset '{name}' has a single class '{label}'")]
    SingleClass { name: String, label: String },

    #[error("label '{label}' does not occur in column '{column}'")]
    UnknownLabel { label: String, column: String },

    #[error(
        "rate {target} unreachable for '{name}': would keep {would_keep} positives (floor is {floor})"
    )]
    RateUnreachable {
        name: String,
        target: f64,
        would_keep: usize,
        floor: usize,
    },

    #[error("too few positives to stratify: have {have}, need {need}")]
    TooFewPositives { have: usize, need: usize },

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("invalid parameter '{name}': {reason}")]
    InvalidParam { name: String, reason: String },

    #[error("feature dimension mismatch: model expects {expected}, input has {got}")]
    DimensionMismatch { expected: usize, got: usize },

    #[error("empty training set")]
    EmptyTrainingSet,

    #[error("scored predictions need both classes present")]
    SingleClassScores,

    #[error("performance matrix is degenerate: {0}")]
    DegenerateMatrix(String),

    #[error("wilcoxon: {0}")]
    Wilcoxon(String),

    #[error("empty selection: {0}")]
    EmptySelection(String),

    #[error("config error in '{path}': {message}")]
    Config { path: String, message: String },

    #[error("results file '{path}': {message}")]
    ResultsFile { path: String, message: String },
}

impl Error {
    pub fn io(path: impl Into<String>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }
}
