use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid dimensions {width}x{height}: both sides must be at least 1")]
    InvalidDimensions { width: usize, height: usize },

    #[error("buffer holds {found} values but {width}x{height} needs {expected}")]
    BufferLength {
        width: usize,
        height: usize,
        expected: usize,
        found: usize,
    },

    #[error("dimension mismatch: expected {expected:?}, found {found:?}")]
    DimensionMismatch {
        expected: (usize, usize),
        found: (usize, usize),
    },

    #[error("object id must be strictly positive")]
    ZeroObjectId,

    #[error("object id {0} appears more than once")]
    DuplicateObject(u8),

    #[error("prediction stack is empty")]
    EmptyStack,

    #[error("canonical member must be an identity transform, got `{0}`")]
    NonCanonicalFirstMember(String),

    #[error("invalid transform descriptor `{0}`")]
    InvalidTransform(String),

    #[error("invalid scale schedule: {0}")]
    InvalidSchedule(String),

    #[error("no scores to aggregate")]
    EmptyScores,

    #[error("frame count mismatch: {pred} predicted frames vs {gt} ground-truth frames")]
    FrameCountMismatch { pred: usize, gt: usize },

    #[error("object {0} never appears in the ground truth")]
    MissingGroundTruth(u8),

    #[error("{path}: unsupported bit depth {depth} (only 8-bit masks are accepted)")]
    UnsupportedBitDepth { path: PathBuf, depth: u8 },

    #[error("{path}: unsupported color type {color} (expected grayscale or indexed)")]
    UnsupportedColorType { path: PathBuf, color: String },

    #[error("{path}: {width}x{height} exceeds the maximum of {max} pixels per side")]
    TooLarge {
        path: PathBuf,
        width: usize,
        height: usize,
        max: usize,
    },

    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("{path}: malformed PNG: {message}")]
    Decode { path: PathBuf, message: String },

    #[error("{path}: could not encode PNG: {message}")]
    Encode { path: PathBuf, message: String },

    #[error("{path}:{line}: {message}")]
    Manifest {
        path: PathBuf,
        line: usize,
        message: String,
    },

    #[error("{0}")]
    Config(String),
}

impl Error {
    pub fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    pub(crate) fn check_dims(expected: (usize, usize), found: (usize, usize)) -> Result<()> {
        if expected == found {
            Ok(())
        } else {
            Err(Error::DimensionMismatch { expected, found })
        }
    }
}
