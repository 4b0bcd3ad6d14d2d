use thiserror::Error;

/// Errors raised by the analysis and ingestion routines.
#[derive(Debug, Error)]
pub enum Error {
    #[error("missing score for unit `{0}`")]
    MissingScore(String),

    #[error("duplicate unit id `{0}`")]
    DuplicateId(String),

    #[error("unknown unit id `{0}`")]
    UnknownUnit(String),

    #[error("{what} must be even, got {value}")]
    Odd { what: &'static str, value: usize },

    #[error("{what} = {value} is outside [{min}, {max}]")]
    OutOfRange {
        what: &'static str,
        value: usize,
        min: usize,
        max: usize,
    },

    #[error("row {row}: {message}")]
    Row { row: usize, message: String },

    #[error("{0}")]
    Invalid(String),

    /// A brute-force size guard or numerical sanity check tripped.
    #[error("numerical guard: {0}")]
    Guard(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),
}

impl Error {
    /// Process exit code for the command-line front end.
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::Guard(_) => 3,
            _ => 2,
        }
    }

    pub(crate) fn range(what: &'static str, value: usize, min: usize, max: usize) -> Self {
        Error::OutOfRange {
            what,
            value,
            min,
            max,
        }
    }
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
