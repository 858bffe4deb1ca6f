use std::path::PathBuf;

use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

/// Every failure the toolkit can report.
///
/// [`Error::code`] yields the stable identifier printed by the command line
/// front end (`ERROR <code>: <message>`).
#[derive(Debug, Error)]
pub enum Error {
    #[error("{path}: {source}")]
    IoFailure {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("bad magic {found:?}, expected {expected:?}")]
    BadMagic { expected: [u8; 4], found: [u8; 4] },
    #[error("unsupported format version {0}")]
    UnsupportedVersion(u32),
    #[error("file truncated: needed {needed} bytes, found {found}")]
    TruncatedFile { needed: usize, found: usize },
    #[error("duplicate entry for layer {layer}, channel {channel}")]
    DuplicateEntry { layer: u32, channel: u32 },
    #[error("non-finite value in filter {index}")]
    NonFiniteValue { index: usize },
    #[error("invalid filter: {0}")]
    InvalidFilter(String),
    #[error("kernel size mismatch: expected {expected}, found {found}")]
    KMismatch { expected: usize, found: usize },
    #[error("filter {index} has zero variance")]
    ZeroVariance { index: usize },
    #[error("candidate set is empty")]
    EmptyCandidates,
    #[error("assignment does not match inputs: {0}")]
    HashMismatch(String),
    #[error("candidate index {index} out of range for {count} candidates")]
    IndexOutOfRange { index: usize, count: usize },
    #[error("training set is empty")]
    EmptyTrainingSet,
    #[error("code {0} outside [0, 1]")]
    CodeOutOfRange(f64),
    #[error("evaluator failed: {0}")]
    EvaluatorFailure(String),
    #[error("objective curve is flat; falling back to remaining count {stop_at}")]
    DegenerateTrace { stop_at: usize },
    #[error("difference of Gaussians needs sigma2 > sigma (got {sigma} and {sigma2})")]
    DegenerateDoG { sigma: f64, sigma2: f64 },
    #[error("bank is empty")]
    EmptyBank,
    #[error("invalid argument: {0}")]
    InvalidArgument(String),
    #[error("malformed {what}: {message}")]
    Parse { what: &'static str, message: String },
}

impl Error {
    pub fn code(&self) -> &'static str {
        match self {
            Error::IoFailure { .. } => "IoFailure",
            Error::BadMagic { .. } => "BadMagic",
            Error::UnsupportedVersion(_) => "UnsupportedVersion",
            Error::TruncatedFile { .. } => "TruncatedFile",
            Error::DuplicateEntry { .. } => "DuplicateEntry",
            Error::NonFiniteValue { .. } => "NonFiniteValue",
            Error::InvalidFilter(_) => "InvalidFilter",
            Error::KMismatch { .. } => "KMismatch",
            Error::ZeroVariance { .. } => "ZeroVariance",
            Error::EmptyCandidates => "EmptyCandidates",
            Error::HashMismatch(_) => "HashMismatch",
            Error::IndexOutOfRange { .. } => "IndexOutOfRange",
            Error::EmptyTrainingSet => "EmptyTrainingSet",
            Error::CodeOutOfRange(_) => "CodeOutOfRange",
            Error::EvaluatorFailure(_) => "EvaluatorFailure",
            Error::DegenerateTrace { .. } => "DegenerateTrace",
            Error::DegenerateDoG { .. } => "DegenerateDoG",
            Error::EmptyBank => "EmptyBank",
            Error::InvalidArgument(_) => "InvalidArgument",
            Error::Parse { .. } => "ParseFailure",
        }
    }

    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::IoFailure {
            path: path.into(),
            source,
        }
    }

    pub(crate) fn parse(what: &'static str, message: impl ToString) -> Self {
        Error::Parse {
            what,
            message: message.to_string(),
        }
    }
}
