use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

/// Errors raised anywhere in the crate.
///
/// Variants group into the four families the CLI maps to exit codes; see
/// [`Error::category`].
#[derive(Debug, Error)]
pub enum Error {
    #[error("config error: {0}")]
    Config(String),

    #[error("invalid configuration:\n  {}", .0.join("\n  "))]
    Validation(Vec<String>),

    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("{path}:{line}: {message}")]
    Format {
        path: PathBuf,
        line: usize,
        message: String,
    },

    #[error("numeric error at cell ({i}, {j}): {message}")]
    Numeric { i: usize, j: usize, message: String },

    #[error("time {t} s outside the hydrograph span [{start}, {end}]")]
    OutOfSpan { t: f64, start: f64, end: f64 },

    #[error("geometry error: {0}")]
    Geometry(String),

    #[error("domain error: {0}")]
    Domain(String),

    #[error("evaluation at ({x}, {y}) failed: {source}")]
    Evaluation {
        x: f64,
        y: f64,
        #[source]
        source: Box<Error>,
    },
}

/// Coarse error family, used for CLI exit codes.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Category {
    Config,
    Io,
    Numeric,
    Domain,
}

impl Category {
    pub fn exit_code(self) -> i32 {
        match self {
            Category::Config => 2,
            Category::Io => 3,
            Category::Numeric => 4,
            Category::Domain => 5,
        }
    }
}

impl Error {
    pub fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    pub fn format(path: impl Into<PathBuf>, line: usize, message: impl Into<String>) -> Self {
        Error::Format {
            path: path.into(),
            line,
            message: message.into(),
        }
    }

    pub fn category(&self) -> Category {
        match self {
            Error::Config(_) | Error::Validation(_) => Category::Config,
            Error::Io { .. } | Error::Format { .. } => Category::Io,
            Error::Numeric { .. } => Category::Numeric,
            Error::OutOfSpan { .. } | Error::Geometry(_) | Error::Domain(_) => Category::Domain,
            Error::Evaluation { source, .. } => source.category(),
        }
    }
}
