use std::path::PathBuf;

use thiserror::Error;

/// Errors produced by the numerical routines and data loaders.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),

    #[error("matrix is not symmetric (asymmetry {asymmetry:.3e} exceeds {tolerance:.3e})")]
    NotSymmetric { asymmetry: f64, tolerance: f64 },

    #[error("matrix is not positive definite (pivot {pivot:.3e} at row {row}); raise the ridge")]
    NotPositiveDefinite { row: usize, pivot: f64 },

    #[error("eigen iteration did not converge within {budget} iterations")]
    NoConvergence { budget: usize },

    #[error("non-finite entry at ({row}, {col})")]
    NonFinite { row: usize, col: usize },

    #[error("degenerate data: {0}")]
    DegenerateData(String),

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("target pseudo-labels are required for conditional MMD")]
    MissingPredictions,

    #[error("vertex {0} has zero degree")]
    ZeroDegree(usize),

    #[error("KMM constraints are infeasible: {0}")]
    Infeasible(String),

    #[error("training set is empty")]
    EmptyTrainingSet,

    #[error("length mismatch: {0} vs {1}")]
    LengthMismatch(usize, usize),

    #[error("{path}: parse error at line {line}, column {column}: {message}")]
    Parse {
        path: PathBuf,
        line: usize,
        column: usize,
        message: String,
    },

    #[error("{path}: ragged rows (line {line} has {found} fields, expected {expected})")]
    RaggedRows {
        path: PathBuf,
        line: usize,
        expected: usize,
        found: usize,
    },

    #[error("{path}: label {value:?} at line {line} is not an integer")]
    NonIntegerLabel {
        path: PathBuf,
        line: usize,
        value: String,
    },

    #[error("io error: {0}")]
    Io(String),
}

impl From<std::io::Error> for Error {
    fn from(e: std::io::Error) -> Self {
        Error::Io(e.to_string())
    }
}

pub type Result<T> = std::result::Result<T, Error>;
