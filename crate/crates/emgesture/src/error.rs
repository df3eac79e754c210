//! Pipeline-wide error type and exit-code mapping.

use std::path::PathBuf;

/// Errors produced anywhere in the pipeline.
///
/// Variants are grouped by the process exit code they map to:
/// usage/configuration problems exit 2, data problems exit 3, and
/// numeric non-convergence exits 4 (only when escalated by `--strict`).
#[derive(Debug, thiserror::Error)]
pub enum Error {
    // ---- usage / configuration (exit 2) ----
    #[error("invalid configuration: {0}")]
    InvalidConfig(String),
    #[error("invalid parameter {name}: {reason}")]
    InvalidParam { name: &'static str, reason: String },

    // ---- data (exit 3) ----
    #[error("file not found: {0}")]
    MissingFile(PathBuf),
    #[error("{path}: expected 2 channels (I/Q), found {found}")]
    ChannelCount { path: PathBuf, found: u16 },
    #[error("{path}: unsupported wav encoding: {detail}")]
    UnsupportedEncoding { path: PathBuf, detail: String },
    #[error("{0}: wav contains no samples")]
    EmptyAudio(PathBuf),
    #[error("wav read failed: {0}")]
    Wav(String),
    #[error("trim bounds [{start_s}, {end_s}) invalid for a {duration_s} s recording")]
    TrimBounds {
        start_s: f64,
        end_s: f64,
        duration_s: f64,
    },
    #[error("segment length {requested_s} s exceeds recording duration {duration_s} s")]
    SegmentTooLong { requested_s: f64, duration_s: f64 },
    #[error("sub-window of {requested_s} s does not fit the {available_s} s segment")]
    SubwindowTooLong { requested_s: f64, available_s: f64 },
    #[error("empty input sequence")]
    EmptyInput,
    #[error("transform length {0} is not a power of two")]
    NonPowerOfTwo(usize),
    #[error("bin index {k} out of range for transform length {n}")]
    BinOutOfRange { k: usize, n: usize },
    #[error("input contains non-finite values")]
    NonFinite,
    #[error("cannot extract {k} modes from a signal of {len} samples")]
    TooManyModes { k: usize, len: usize },
    #[error("mode sets were produced with different decomposition parameters: {0}")]
    VmdConfigMismatch(String),
    #[error("length mismatch: {left} vs {right}")]
    LengthMismatch { left: usize, right: usize },
    #[error("feature dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },
    #[error("degenerate dataset: {0}")]
    DegenerateDataset(String),
    #[error("cannot infer a label from file name {0:?} (expected <class>_<take>.wav)")]
    UnlabeledFile(PathBuf),
    #[error("malformed {what} at line {line}: {reason}")]
    MalformedRecord {
        what: &'static str,
        line: usize,
        reason: String,
    },
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error("json: {0}")]
    Json(#[from] serde_json::Error),

    // ---- numeric (exit 4 under --strict) ----
    #[error("{what} did not converge within {iterations} iterations (residual {residual:.3e})")]
    NonConvergence {
        what: &'static str,
        iterations: usize,
        residual: f64,
    },
}

impl Error {
    /// Process exit code for this error: 2 usage, 3 data, 4 numeric.
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::InvalidConfig(_) | Error::InvalidParam { .. } => 2,
            Error::NonConvergence { .. } => 4,
            _ => 3,
        }
    }
}

pub type Result<T> = std::result::Result<T, Error>;
