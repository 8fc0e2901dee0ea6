use std::path::PathBuf;

use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("failed to parse {what}: {message}")]
    Parse { what: String, message: String },

    #[error("invalid value at `{field}`: {message}")]
    Validation { field: String, message: String },

    #[error("length mismatch in {what}: expected {expected}, found {found}")]
    LengthMismatch {
        what: String,
        expected: usize,
        found: usize,
    },

    #[error("model error: {0}")]
    Model(String),

    #[error("variable `{0}` has no value in the supplied point")]
    MissingVariable(String),

    #[error("solver backend `{backend}` unavailable: {message}")]
    BackendUnavailable { backend: String, message: String },

    #[error("numeric failure in solver: {0}")]
    NumericFailure(String),

    #[error("solve did not reach optimality: {0}")]
    NotOptimal(String),

    #[error("charge segment {segment} holds {value} MWh, exceeding its width {width} MWh")]
    SegmentOverflow {
        segment: usize,
        value: f64,
        width: f64,
    },

    #[error("electrolyzer power {power} MW is outside the admissible range for on={on}")]
    PowerOutOfRange { power: f64, on: bool },

    #[error("duality gap in scenario {scenario}: {magnitude}")]
    DualityGap { scenario: usize, magnitude: f64 },

    #[error("solution is incomplete: {0}")]
    IncompleteSolution(String),

    #[error("enumeration needs {nodes} nodes, above the cap of {cap}")]
    TooLarge { nodes: u128, cap: u128 },

    #[error("verification failed: {0}")]
    Verification(String),

    #[error("report is empty")]
    EmptyReport,

    #[error("I/O error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
}

impl Error {
    pub(crate) fn validation(field: impl Into<String>, message: impl Into<String>) -> Self {
        Error::Validation {
            field: field.into(),
            message: message.into(),
        }
    }

    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
