use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("shape error: {0}")]
    Shape(String),

    #[error("i/o error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("csv error: {0}")]
    Csv(#[from] csv::Error),

    #[error("missing value at row {row}, column '{column}': imputation is out of scope")]
    MissingValue { row: usize, column: String },

    #[error("cannot parse '{value}' at row {row}, column '{column}' as a finite number")]
    Parse {
        row: usize,
        column: String,
        value: String,
    },

    #[error("target column '{0}' not found")]
    TargetColumn(String),

    #[error("invalid data: {0}")]
    Data(String),

    #[error("unknown target value {0}")]
    UnseenTarget(f64),

    #[error("cannot parse chromosome: {0}")]
    Chromosome(String),

    #[error("invalid parameter: {0}")]
    Param(String),

    #[error("json error: {0}")]
    Json(#[from] serde_json::Error),
}

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }
}
