use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = AceError> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum AceError {
    #[error("shape mismatch: expected {expected:?} (height, width), found {found:?}")]
    ShapeMismatch {
        expected: (usize, usize),
        found: (usize, usize),
    },

    #[error("value length {len} does not match shape {height}x{width}")]
    LengthMismatch {
        height: usize,
        width: usize,
        len: usize,
    },

    #[error("non-finite value at index {index}")]
    NonFiniteInput { index: usize },

    #[error("field of {height}x{width} is smaller than the {min}x{min} minimum")]
    FieldTooSmall {
        height: usize,
        width: usize,
        min: usize,
    },

    #[error("observation and truth are jointly constant ({value}); cannot normalize")]
    DegenerateRange { value: f64 },

    #[error("median kernel width must be odd and at least 1, got {0}")]
    EvenKernel(usize),

    #[error("negative input to {what}: {value}")]
    NegativeInput { what: &'static str, value: f64 },

    #[error("invalid configuration: {0}")]
    InvalidConfig(String),

    #[error("invalid synthetic spec{}: {reason}", line.map(|l| format!(" (line {l}, field `{field}`)")).unwrap_or_else(|| format!(" (field `{field}`)")))]
    InvalidSpec {
        line: Option<usize>,
        field: String,
        reason: String,
    },

    #[error("invalid parameter `{name}`: {reason}")]
    InvalidParameter { name: &'static str, reason: String },

    #[error("bad magic at byte offset {offset}")]
    BadMagic { offset: u64 },

    #[error("unsupported array header at byte offset {offset}: {detail}")]
    UnsupportedDtype { offset: u64, detail: String },

    #[error("fortran-ordered arrays are not supported (header at byte offset {offset})")]
    FortranOrderUnsupported { offset: u64 },

    #[error("payload truncated at byte offset {offset}: expected {expected} bytes, found {found}")]
    TruncatedPayload {
        offset: u64,
        expected: u64,
        found: u64,
    },

    #[error("graymap range is empty: lo {lo} must be below hi {hi}")]
    InvalidRange { lo: f64, hi: f64 },

    #[error("{path}: {source}")]
    File {
        path: PathBuf,
        #[source]
        source: Box<AceError>,
    },

    #[error("case `{case_id}`: {source}")]
    Case {
        case_id: String,
        #[source]
        source: Box<AceError>,
    },

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),
}

impl AceError {
    /// True when the error comes from bad input rather than the environment.
    pub fn is_validation(&self) -> bool {
        match self {
            AceError::Io(_) | AceError::Csv(_) => false,
            AceError::File { source, .. } | AceError::Case { source, .. } => source.is_validation(),
            _ => true,
        }
    }

    /// Innermost error with path and case context stripped.
    pub fn root(&self) -> &AceError {
        match self {
            AceError::File { source, .. } | AceError::Case { source, .. } => source.root(),
            other => other,
        }
    }

    pub fn in_file(self, path: impl Into<PathBuf>) -> AceError {
        AceError::File {
            path: path.into(),
            source: Box::new(self),
        }
    }

    pub fn in_case(self, case_id: impl Into<String>) -> AceError {
        AceError::Case {
            case_id: case_id.into(),
            source: Box::new(self),
        }
    }
}
