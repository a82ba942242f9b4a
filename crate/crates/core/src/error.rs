use std::path::PathBuf;

use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("malformed feature header: {0}")]
    MalformedHeader(String),

    #[error("feature payload holds {actual} values but header declares {rows}x{cols}")]
    DimensionMismatch {
        rows: usize,
        cols: usize,
        actual: usize,
    },

    #[error("metadata has {meta_rows} rows but feature matrix has {feature_rows}")]
    RowCountMismatch {
        feature_rows: usize,
        meta_rows: usize,
    },

    #[error("non-finite value at row {row}, column {col}")]
    NonFinite { row: usize, col: usize },

    #[error("malformed metadata: {0}")]
    MalformedMeta(String),

    #[error("row {row} is the zero vector and cannot be normalized")]
    ZeroRow { row: usize },

    #[error("propagation produced a zero row {row} at iteration {iteration}")]
    ZeroRowAfterPropagation { iteration: usize, row: usize },

    #[error("shape mismatch: {0}")]
    Shape(String),

    #[error("invalid configuration: {0}")]
    Config(String),

    #[error("feature set has no query rows")]
    NoQueries,

    #[error("feature set has no gallery rows")]
    NoGallery,

    #[error("numerical failure: {0}")]
    Numeric(String),

    #[error("{stage}: {source}")]
    Stage {
        stage: &'static str,
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

    /// Wraps the error with the name of the pipeline stage that raised it.
    pub fn in_stage(self, stage: &'static str) -> Self {
        Error::Stage {
            stage,
            source: Box::new(self),
        }
    }

    /// Process exit code: 1 validation, 2 runtime/numeric, 3 I/O.
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::Stage { source, .. } => source.exit_code(),
            Error::Io { .. } => 3,
            Error::MalformedHeader(_)
            | Error::DimensionMismatch { .. }
            | Error::RowCountMismatch { .. }
            | Error::NonFinite { .. }
            | Error::MalformedMeta(_)
            | Error::Config(_)
            | Error::NoQueries
            | Error::NoGallery => 1,
            Error::ZeroRow { .. }
            | Error::ZeroRowAfterPropagation { .. }
            | Error::Shape(_)
            | Error::Numeric(_) => 2,
        }
    }
}
