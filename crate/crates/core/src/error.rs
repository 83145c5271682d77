use std::path::PathBuf;

use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("frame too small: {width}x{height} (need at least 3x3)")]
    FrameTooSmall { width: usize, height: usize },

    #[error("buffer length {got} does not match {width}x{height}")]
    BadDimensions {
        width: usize,
        height: usize,
        got: usize,
    },

    #[error("blank frame: gradient magnitude is zero everywhere")]
    BlankFrame,

    #[error("histogram is empty")]
    EmptyHistogram,

    #[error("profile too short: length {0} (need at least 3)")]
    ProfileTooShort(usize),

    #[error("rectangle has zero area")]
    ZeroArea,

    #[error("rectangle {rect:?} lies outside a {width}x{height} frame")]
    OutOfBounds {
        rect: crate::Rect,
        width: u32,
        height: u32,
    },

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("empty reference text")]
    EmptyReference,

    #[error("configuration error: {0}")]
    Config(String),

    #[error("external command failed ({status}): {stderr}")]
    CommandFailed { status: String, stderr: String },

    #[error("external command timed out after {0:?}")]
    CommandTimeout(std::time::Duration),

    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("{path}: {source}")]
    Image {
        path: PathBuf,
        #[source]
        source: image::ImageError,
    },

    #[error("{path}:{line}: {source}")]
    Json {
        path: PathBuf,
        line: usize,
        #[source]
        source: serde_json::Error,
    },
}

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
