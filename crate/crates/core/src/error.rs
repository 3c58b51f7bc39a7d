use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("line {line}: malformed record: {reason}")]
    Malformed { line: usize, reason: String },

    #[error("line {line}: rejected record: {reason}")]
    Rejected { line: usize, reason: String },

    #[error("invalid manifest: {0}")]
    InvalidManifest(String),

    #[error("run `{0}` is already registered")]
    DuplicateRun(String),

    #[error("run `{0}` has no records")]
    EmptyRun(String),

    #[error("empty input: {0}")]
    EmptyInput(&'static str),

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("insufficient data: {found} usable points, need at least {required}")]
    InsufficientData { found: usize, required: usize },

    #[error("scaling line is not extrapolable (slope {slope} <= 0)")]
    NonExtrapolable { slope: f64 },

    #[error("site {site:?} is outside a lattice of side {side}")]
    OutOfBounds { site: Vec<usize>, side: usize },

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),
}

impl Error {
    /// Line number for per-line ingestion errors.
    pub fn line(&self) -> Option<usize> {
        match self {
            Error::Malformed { line, .. } | Error::Rejected { line, .. } => Some(*line),
            _ => None,
        }
    }
}
