use std::path::PathBuf;

/// Errors raised anywhere in the toolkit.
///
/// Variants split into two families: [`Error::is_validation`] is true for
/// problems detected before any work starts (bad configuration, missing
/// inputs, malformed files), false for failures during a computation.
#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("{path}:{line}: {reason}")]
    Parse { path: PathBuf, line: usize, reason: String },

    #[error("invalid configuration: {0}")]
    Config(String),

    #[error("missing upstream artifact {0} (run the producing stage first)")]
    MissingArtifact(PathBuf),

    #[error("invalid input: {0}")]
    InvalidInput(String),

    #[error("degenerate labels: training data must contain both classes")]
    DegenerateLabels,

    #[error("degenerate series: {0}")]
    DegenerateSeries(String),

    #[error("series too short: need at least {min} values, got {len}")]
    SeriesTooShort { len: usize, min: usize },

    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),

    #[error("conservation check failed: {0}")]
    Conservation(String),

    #[error("json: {0}")]
    Json(#[from] serde_json::Error),

    #[error("csv: {0}")]
    Csv(#[from] csv::Error),
}

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    pub(crate) fn parse(path: impl Into<PathBuf>, line: usize, reason: impl Into<String>) -> Self {
        Error::Parse {
            path: path.into(),
            line,
            reason: reason.into(),
        }
    }

    /// True when the error was raised while validating inputs or
    /// configuration, before any stage work ran.
    pub fn is_validation(&self) -> bool {
        matches!(self, Error::Parse { .. } | Error::Config(_) | Error::MissingArtifact(_))
    }
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
