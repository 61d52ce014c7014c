//! Error type shared by every stage of the pipeline.

use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    /// Malformed input text. `line` is 1-based; `column` is 1-based when known.
    #[error("parse error at line {line}{}: {message}", column.map(|c| format!(", column {c}")).unwrap_or_default())]
    Parse {
        line: usize,
        column: Option<usize>,
        message: String,
    },

    #[error("validation error: {0}")]
    Validation(String),

    #[error("row label {label:?} not found; available labels: {}", available.join(", "))]
    Lookup {
        label: String,
        available: Vec<String>,
    },

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    /// Fewer than two points, or all years identical.
    #[error("degenerate input: {0}")]
    Degenerate(String),

    #[error("insufficient data: {0}")]
    InsufficientData(String),

    #[error("year {year} is at or beyond the singularity of the fitted hyperbola (singularity year {singularity})")]
    Singularity { year: f64, singularity: f64 },

    #[error("infeasible partition: {0}")]
    Infeasible(String),

    #[error("nothing to plot: {0}")]
    NothingToPlot(String),

    #[error("i/o error: {0}")]
    Io(String),
}

impl Error {
    /// Process exit status for this error: 1 for bad input, 2 for analyses
    /// that cannot be carried out on otherwise valid input.
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::Parse { .. }
            | Error::Validation(_)
            | Error::Lookup { .. }
            | Error::InvalidArgument(_)
            | Error::Io(_) => 1,
            Error::Degenerate(_)
            | Error::InsufficientData(_)
            | Error::Singularity { .. }
            | Error::Infeasible(_)
            | Error::NothingToPlot(_) => 2,
        }
    }
}

impl From<std::io::Error> for Error {
    fn from(e: std::io::Error) -> Self {
        Error::Io(e.to_string())
    }
}
