use std::path::PathBuf;

use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid configuration: {0}")]
    Config(String),

    #[error("invalid frame: {0}")]
    InvalidFrame(String),

    #[error("invalid stack: {0}")]
    InvalidStack(String),

    #[error("dimension mismatch: {left:?} vs {right:?}")]
    DimensionMismatch {
        left: (usize, usize),
        right: (usize, usize),
    },

    #[error("shift ({s}, {t}) leaves no overlap in a {rows}x{cols} frame")]
    EmptyOverlap {
        s: isize,
        t: isize,
        rows: usize,
        cols: usize,
    },

    #[error("shift bound w = {w} out of range for a {rows}x{cols} frame")]
    ShiftBoundOutOfRange { w: usize, rows: usize, cols: usize },

    #[error("shift grids disagree: bound {left} vs {right}")]
    RangeMismatch { left: usize, right: usize },

    #[error("alignment failed: {0}")]
    AlignmentFailed(String),

    #[error("unsupported stack format: {0}")]
    UnsupportedFormat(String),

    #[error("page {page} is inconsistent with page 0: {reason}")]
    InconsistentPages { page: usize, reason: String },

    #[error("truncated stack file: {0}")]
    Truncated(String),

    #[error("malformed synthetic spec: {0}")]
    SynthSpec(String),

    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("tiff error: {0}")]
    Tiff(#[from] tiff::TiffError),
}

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }
}
