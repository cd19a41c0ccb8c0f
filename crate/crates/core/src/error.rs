use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("empty input: {0}")]
    Empty(&'static str),

    #[error("missing column `{column}`")]
    MissingColumn { column: String },

    #[error("row {row}, column `{column}`: {message}")]
    Cell {
        row: usize,
        column: String,
        message: String,
    },

    #[error("row {row}: {message}")]
    Row { row: usize, message: String },

    #[error("invalid schema: {0}")]
    Schema(String),

    #[error("invalid parameter: {0}")]
    Parameter(String),

    #[error("dimension mismatch: expected {expected}, found {found}")]
    Dimension { expected: usize, found: usize },

    #[error("length mismatch: {0}")]
    Length(String),

    #[error("invalid data: {0}")]
    Invalid(String),

    #[error("unsupported tree format version {found} (expected {expected})")]
    Version { expected: u32, found: u64 },

    #[error("malformed tree file at line {line}, column {column}: {message}")]
    Parse {
        line: usize,
        column: usize,
        message: String,
    },

    #[error(transparent)]
    Csv(#[from] csv::Error),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}
