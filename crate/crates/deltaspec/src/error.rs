use std::path::PathBuf;
use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

/// Error type shared by every operation in the crate.
#[derive(Debug, Error)]
pub enum Error {
    #[error("wav file not found: {0}")]
    WavMissing(PathBuf),

    #[error("malformed wav file {path}: {detail}")]
    WavMalformed { path: PathBuf, detail: String },

    #[error("unsupported wav encoding in {path}: {detail}")]
    WavUnsupported { path: PathBuf, detail: String },

    #[error("cannot write {path}: {source}")]
    WavWrite {
        path: PathBuf,
        source: std::io::Error,
    },

    #[error("invalid waveform: {0}")]
    InvalidWaveform(String),

    #[error("invalid configuration: {0}")]
    InvalidConfig(String),

    #[error("signal of {len} samples is shorter than one window ({win_length})")]
    SignalTooShort { len: usize, win_length: usize },

    #[error("signal lengths differ: {left} vs {right}")]
    LengthMismatch { left: usize, right: usize },

    #[error("matrix shapes differ: expected {expected:?}, got {got:?}")]
    ShapeMismatch {
        expected: (usize, usize),
        got: (usize, usize),
    },

    #[error("matrix has no elements")]
    EmptyMatrix,

    #[error("{role} is silent: energy {energy:.3e} is at or below the floor")]
    Silent { role: &'static str, energy: f64 },

    #[error(
        "overlap-add target length {total} cannot hold {frames} frames of {frame_len} at hop {hop}"
    )]
    OverlapAddLength {
        total: usize,
        frames: usize,
        frame_len: usize,
        hop: usize,
    },

    #[error("window sum below {threshold:.1e} at interior sample {index}; configuration is not invertible")]
    NonInvertibleWindow { index: usize, threshold: f64 },

    #[error("spectrogram claims {frames} frames but {expected} fit the source length")]
    FrameCountMismatch { frames: usize, expected: usize },

    #[error("reference transcript is empty")]
    EmptyReference,

    #[error("candidate pool is empty")]
    EmptyPool,

    #[error("loss became non-finite ({value}) at step {step}")]
    NonFiniteLoss { step: usize, value: f64 },

    #[error("manifest line {line}: {detail}")]
    Manifest { line: usize, detail: String },

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

impl From<csv::Error> for Error {
    fn from(e: csv::Error) -> Self {
        Error::Io(std::io::Error::other(e))
    }
}

impl From<serde_json::Error> for Error {
    fn from(e: serde_json::Error) -> Self {
        Error::Io(std::io::Error::other(e))
    }
}
