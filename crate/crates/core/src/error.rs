use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    /// A model-level invariant was violated by an input value.
    #[error("invalid {field}: {reason}")]
    Invalid { field: String, reason: String },

    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },

    #[error("negative load {value} at index {index}")]
    NegativeEntry { index: usize, value: f64 },

    #[error("at least one cargo type is required")]
    EmptyCargoList,

    #[error("duplicate cargo label `{0}`")]
    DuplicateLabel(String),

    #[error("matrix is not symmetric: |a[{row}][{col}] - a[{col}][{row}]| = {gap:e}")]
    NotSymmetric { row: usize, col: usize, gap: f64 },

    #[error("empty vector")]
    EmptyVector,

    #[error("lattice too large: about {estimated:.3e} points exceeds the cap of {max_points:.3e}")]
    LatticeTooLarge { estimated: f64, max_points: f64 },

    #[error("syntax error at line {line}, column {column}: {message}")]
    Syntax {
        line: usize,
        column: usize,
        message: String,
    },

    #[error("scenario error: {0}")]
    Scenario(String),
}

impl Error {
    pub(crate) fn invalid(field: impl Into<String>, reason: impl Into<String>) -> Self {
        Error::Invalid {
            field: field.into(),
            reason: reason.into(),
        }
    }
}
