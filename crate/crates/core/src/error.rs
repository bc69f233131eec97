use std::io;
use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: io::Error,
    },

    #[error("{source_name} line {line}: {message}")]
    Malformed {
        source_name: String,
        line: usize,
        message: String,
    },

    #[error("duplicate sample id {0:?}")]
    DuplicateId(String),

    #[error("score out of range for sample {id:?}, trait {trait_code}: {value}")]
    ScoreOutOfRange {
        id: String,
        trait_code: char,
        value: f64,
    },

    #[error("empty bin {}: no contributing samples fall in these score intervals", format_bins(.0))]
    EmptyBins(Vec<usize>),

    #[error("no informative mass: every bin has zero aggregated probability")]
    NoInformativeMass,

    #[error("sample {id:?} rejected by filter rule {rule}")]
    Rejected { id: String, rule: &'static str },

    #[error("format version mismatch: expected {expected}, found {found}")]
    VersionMismatch { expected: u32, found: String },

    #[error("checksum failure in {path}: {detail}")]
    Checksum { path: PathBuf, detail: String },

    #[error("feature arity mismatch: model expects {expected}, got {found}")]
    ArityMismatch { expected: usize, found: usize },

    #[error("feature name mismatch at column {column}: model expects {expected:?}, got {found:?}")]
    FeatureNameMismatch {
        column: usize,
        expected: String,
        found: String,
    },

    #[error("classification needs at least two distinct labels")]
    SingleClass,

    #[error("unknown label {0:?}")]
    UnknownLabel(String),

    #[error("inconsistent corpus store: {0}")]
    Inconsistent(String),

    #[error("{0}")]
    Invalid(String),

    #[error("json: {0}")]
    Json(#[from] serde_json::Error),

    #[error("csv: {0}")]
    Csv(#[from] csv::Error),
}

impl Error {
    pub fn invalid(msg: impl Into<String>) -> Self {
        Error::Invalid(msg.into())
    }

    pub(crate) fn io(path: impl Into<PathBuf>, source: io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }
}

fn format_bins(bins: &[usize]) -> String {
    bins.iter()
        .map(|b| b.to_string())
        .collect::<Vec<_>>()
        .join(", ")
}
