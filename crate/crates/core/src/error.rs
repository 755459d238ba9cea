use std::path::PathBuf;

use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("io error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("wav decode error: {0}")]
    Wav(#[from] hound::Error),
    #[error("parse error at line {line}: {msg}")]
    Parse { line: usize, msg: String },
    #[error("empty signal")]
    EmptySignal,
    #[error("unsupported wav: {0}")]
    UnsupportedWav(String),
    #[error("signal of {len} samples is shorter than one frame of {frame_len}")]
    SignalTooShort { len: usize, frame_len: usize },
    #[error("invalid parameter `{name}`: {msg}")]
    InvalidParameter { name: &'static str, msg: String },
    #[error("curve disjoint from grid")]
    CurveDisjointFromGrid,
    #[error("grid mismatch between likelihoods")]
    GridMismatch,
    #[error("empty input: {0}")]
    EmptyInput(&'static str),
    #[error("no candidate maps inside [{r_min}, {r_max}] rpm")]
    NoCandidateInBounds { r_min: f64, r_max: f64 },
    #[error("no spectral peaks in band for frame {frame}")]
    NoSpectralPeaks { frame: usize },
    #[error("trajectory leaves rpm bounds: {rpm:.3} not in [{r_min}, {r_max}]")]
    TrajectoryOutOfBounds { rpm: f64, r_min: f64, r_max: f64 },
    #[error("length mismatch: {a} vs {b}")]
    LengthMismatch { a: usize, b: usize },
    #[error("invalid config field `{field}`: {msg}")]
    Config { field: String, msg: String },
    #[error("json error: {0}")]
    Json(#[from] serde_json::Error),
}

impl Error {
    pub fn param(name: &'static str, msg: impl Into<String>) -> Self {
        Error::InvalidParameter {
            name,
            msg: msg.into(),
        }
    }

    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }
}
