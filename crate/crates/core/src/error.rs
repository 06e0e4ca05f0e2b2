use std::path::PathBuf;

/// Errors surfaced by every stage of the pipeline.
#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("{}: {source}", path.display())]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("{}: bad magic {found:?}, expected {expected:?}", path.display())]
    BadMagic {
        path: PathBuf,
        expected: [u8; 4],
        found: [u8; 4],
    },

    #[error("{}: unsupported format version {}", path.display(), version)]
    UnsupportedVersion { path: PathBuf, version: u32 },

    #[error("{context}: dimension mismatch, expected {expected}, found {found}")]
    DimensionMismatch {
        context: String,
        expected: String,
        found: String,
    },

    #[error("{}: truncated payload, expected {expected} bytes, found {found}", path.display())]
    Truncated {
        path: PathBuf,
        expected: usize,
        found: usize,
    },

    #[error("{context}: non-finite value at index {index}")]
    NonFinite { context: String, index: usize },

    #[error("{}: {message}", path.display())]
    Image { path: PathBuf, message: String },

    #[error("{}: manifest parse error: {message}", path.display())]
    ManifestParse { path: PathBuf, message: String },

    #[error("manifest entry {index} ({id:?}): {message}")]
    ManifestEntry {
        index: usize,
        id: String,
        message: String,
    },

    #[error("coordinate space mismatch: expected {expected}, found {found}")]
    SpaceMismatch { expected: String, found: String },

    #[error("invalid prompt set: {0}")]
    InvalidPrompt(String),

    #[error("invalid configuration: {0}")]
    InvalidConfig(String),

    #[error("non-finite objective at iteration {iteration}")]
    NonFiniteObjective { iteration: usize },

    #[error("mask is empty")]
    EmptyMask,

    #[error("decoder: {0}")]
    Decoder(String),

    #[error("sample {id:?}: {source}")]
    Sample {
        id: String,
        #[source]
        source: Box<Error>,
    },
}

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    pub(crate) fn dims(context: impl Into<String>, expected: impl ToString, found: impl ToString) -> Self {
        Error::DimensionMismatch {
            context: context.into(),
            expected: expected.to_string(),
            found: found.to_string(),
        }
    }

    /// Attaches a sample id to an error raised while processing that sample.
    pub fn for_sample(self, id: &str) -> Self {
        Error::Sample {
            id: id.to_string(),
            source: Box::new(self),
        }
    }
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
