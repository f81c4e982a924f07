use std::path::PathBuf;

use thiserror::Error;

/// Errors produced anywhere in the analysis pipeline.
#[derive(Debug, Error)]
pub enum Error {
    #[error("i/o error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("cannot decode audio {path}: {reason}")]
    Decode { path: PathBuf, reason: String },

    #[error("unsupported audio encoding in {path}: {reason}")]
    UnsupportedEncoding { path: PathBuf, reason: String },

    #[error("audio {0} contains no samples")]
    EmptyAudio(String),

    #[error("manifest row {row}: {reason}")]
    Manifest { row: usize, reason: String },

    #[error("invalid parameter: {0}")]
    InvalidParam(String),

    #[error("audio too short: need at least {needed} samples, got {got}")]
    TooShort { needed: usize, got: usize },

    #[error("too few frames for drift estimation ({found} within the band, need {needed}); skip calibration for this recording")]
    TooFewFrames { found: usize, needed: usize },

    #[error("distribution has no mass")]
    EmptyDistribution,

    #[error("need at least {needed} recordings, got {got}")]
    TooFewRecordings { needed: usize, got: usize },

    #[error("EM diverged at iteration {iteration}; log-likelihood trace: {trace:?}")]
    EmDiverged { iteration: usize, trace: Vec<f64> },

    #[error("no GMM component has variance below {threshold}")]
    NoRepresentativeComponents { threshold: f64 },

    #[error("class {0} absent from training data")]
    MissingClass(&'static str),

    #[error("class {class} has {count} recordings, fewer than k = {k}")]
    TooFewPerClass {
        class: &'static str,
        count: usize,
        k: usize,
    },

    #[error("dataset error: {0}")]
    Dataset(String),

    #[error("checkpoint error: {0}")]
    Checkpoint(String),

    #[error("feature cache error: {0}")]
    Cache(String),

    #[error("config error: {0}")]
    Config(String),

    #[error(transparent)]
    Csv(#[from] csv::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }
}
