use std::path::PathBuf;

/// Error type shared by all modules in this crate.
///
/// The split matters to callers: `InvalidArgument`, `DegenerateInput` and
/// `UndefinedMetric` mean the inputs were rejected up front, while `Io`,
/// `MalformedHeader`, `MalformedPayload`, `MalformedPath` and
/// `LengthMismatch` surface problems with files encountered mid-operation.
/// The CLI maps the first group to exit code 1 and the second to exit
/// code 2.
#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    /// A statistic that has no defined value for this input, e.g. surface
    /// distances of an empty mask.
    #[error("undefined metric: {0}")]
    UndefinedMetric(String),

    /// Structurally valid input on which the requested computation is still
    /// meaningless, e.g. a paired t-test with zero variance.
    #[error("degenerate input: {0}")]
    DegenerateInput(String),

    #[error("malformed volume header: {0}")]
    MalformedHeader(String),

    #[error("malformed volume payload: {0}")]
    MalformedPayload(String),

    #[error("malformed path file: {0}")]
    MalformedPath(String),

    #[error("payload length mismatch: header implies {expected} bytes, found {actual}")]
    LengthMismatch { expected: usize, actual: usize },

    #[error("i/o error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
}

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io { path: path.into(), source }
    }

    /// True for errors that indicate the caller passed bad inputs, as
    /// opposed to failures of the environment (files, I/O).
    pub fn is_validation(&self) -> bool {
        matches!(
            self,
            Error::InvalidArgument(_) | Error::UndefinedMetric(_) | Error::DegenerateInput(_)
        )
    }
}

pub type Result<T> = std::result::Result<T, Error>;
