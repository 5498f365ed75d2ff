use std::path::PathBuf;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("{path}:{line}: parse error: {message}")]
    Parse {
        path: PathBuf,
        line: usize,
        message: String,
    },
    #[error("duplicate sample id {0:?}")]
    DuplicateId(String),
    #[error("sample {id:?}: invalid sc value {value} (expected 0 or 1)")]
    InvalidSc { id: String, value: String },
    #[error("sample {id:?}: {message}")]
    InvalidSample { id: String, message: String },
    #[error("invalid split: {0}")]
    InvalidSplit(String),
    #[error("corpus of {size} samples is too small for split {spec}")]
    CorpusTooSmall { size: usize, spec: String },
    #[error("result rows do not share one metric set (row {0:?})")]
    HeterogeneousMetrics(String),
    #[error("invalid regex for rule {name:?}: {source}")]
    InvalidRegex {
        name: String,
        #[source]
        source: regex::Error,
    },
    #[error("invalid configuration: {0}")]
    Config(String),
    #[error("n-gram order must be positive")]
    ZeroOrder,
    #[error("no labeled samples")]
    NoLabels,
    #[error("empty partition: {0}")]
    EmptyPartition(String),
    #[error("length mismatch: {0} vs {1}")]
    LengthMismatch(usize, usize),
    #[error("empty input")]
    EmptyInput,
    #[error("sample {0:?} has no scores")]
    MissingScores(String),
    #[error("checker not found: {0}")]
    CheckerNotFound(String),
    #[error("checker sandbox failure: {0}")]
    Sandbox(String),
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
}

/// Process exit status categories.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ErrorClass {
    Config = 1,
    Data = 2,
    Checker = 3,
}

impl Error {
    pub fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    pub fn class(&self) -> ErrorClass {
        match self {
            Error::InvalidRegex { .. }
            | Error::Config(_)
            | Error::ZeroOrder
            | Error::InvalidSplit(_) => ErrorClass::Config,
            Error::CheckerNotFound(_) | Error::Sandbox(_) => ErrorClass::Checker,
            _ => ErrorClass::Data,
        }
    }
}
