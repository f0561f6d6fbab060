use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    /// Grid or array shape violates a structural invariant.
    #[error("structural error: {0}")]
    Structural(String),

    /// Non-finite or out-of-range numeric input.
    #[error("invalid input: {0}")]
    Input(String),

    #[error("x = {x} lies outside the sampled support [{lo}, {hi}]")]
    Extrapolation { x: f64, lo: f64, hi: f64 },

    /// The linearized flow is only closed on data vanishing at the peak; a
    /// nonzero peak value opens a jump in `v` at the peak for every t > 0.
    #[error(
        "jump generation: v0(0) = {value:e}; the linearized flow requires the value at the \
         peak to vanish, otherwise v(t, ·) develops a jump at the peak for every t > 0"
    )]
    JumpGeneration { value: f64 },

    #[error("integration failed at t = {t}: {reason}")]
    Integration { t: f64, reason: String },

    /// Adjacent characteristics met or crossed.
    #[error("characteristics crossed at t = {t} between labels {index} and {}", index + 1)]
    CharacteristicCrossing { t: f64, index: usize },

    #[error("configuration error: {0}")]
    Config(String),

    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error(transparent)]
    Csv(#[from] csv::Error),

    #[error(transparent)]
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
