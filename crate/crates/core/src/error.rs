//! Crate-wide error type.

use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid profile: {0}")]
    InvalidProfile(String),

    #[error(
        "degenerate capture: no shifted component fits below the effective Nyquist \
         {nyquist_hz} Hz (L={rows}, frame rate {frame_rate} fps)"
    )]
    DegenerateCapture {
        rows: usize,
        frame_rate: f64,
        nyquist_hz: f64,
    },

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("search band {low_hz}..{high_hz} Hz falls outside (0, {nyquist_hz}) Hz")]
    BandOutOfRange {
        low_hz: f64,
        high_hz: f64,
        nyquist_hz: f64,
    },

    #[error("window is all zeros (or constant); no spectral peak to estimate")]
    EmptyWindow,

    #[error("series too short: need {needed} samples, have {actual}")]
    TooShort { needed: usize, actual: usize },

    #[error("shape mismatch: {0}")]
    ShapeMismatch(String),

    #[error("zero-variance input: {0}")]
    ZeroVariance(String),

    #[error(
        "alias ENF lands at DC for frame rate {frame_rate} fps and illumination \
         {illumination_hz} Hz; vertical phase analysis is inapplicable"
    )]
    AliasAtDc {
        frame_rate: f64,
        illumination_hz: f64,
    },

    #[error("per-row phase too noisy for a reliable fit (circular variance {variance:.3})")]
    UnreliablePhase { variance: f64 },

    #[error("claimed start {claimed} is outside the reference coverage {start}..{end}")]
    OutsideReference {
        claimed: String,
        start: String,
        end: String,
    },

    #[error("{file}:{line}: {rule}")]
    Parse {
        file: String,
        line: usize,
        rule: String,
    },

    #[error("io error on {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
}
