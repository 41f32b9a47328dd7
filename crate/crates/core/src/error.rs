use std::path::PathBuf;

/// Errors raised by the affinemc library.
#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("block size {0} must be a power of two >= 8")]
    InvalidBlockSize(u32),

    #[error("motion vector precision 1/{found} where 1/{expected} is required")]
    WrongPrecision { expected: u32, found: u32 },

    #[error("position ({x}, {y}) lies outside the {size}x{size} block")]
    OutOfBlock { x: i32, y: i32, size: u32 },

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),

    #[error(
        "filter reach [{x0}, {x1}) x [{y0}, {y1}) exceeds the padded plane \
         [{min_x}, {max_x}) x [{min_y}, {max_y})"
    )]
    ReachViolation {
        x0: i64,
        x1: i64,
        y0: i64,
        y1: i64,
        min_x: i64,
        max_x: i64,
        min_y: i64,
        max_y: i64,
    },

    #[error("{path}: file holds {available} bytes but frame {frame_index} needs {needed}")]
    ShortFile {
        path: PathBuf,
        frame_index: usize,
        needed: u64,
        available: u64,
    },

    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("{path}:{line}: {message}")]
    Parse {
        path: PathBuf,
        line: usize,
        message: String,
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

pub type Result<T> = std::result::Result<T, Error>;
