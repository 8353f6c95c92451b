use std::fmt;
use std::path::PathBuf;

pub type Result<T> = std::result::Result<T, Error>;

/// One violated invariant, named by the offending field path.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Violation {
    pub field: String,
    pub message: String,
}

impl Violation {
    pub fn new(field: impl Into<String>, message: impl Into<String>) -> Self {
        Self {
            field: field.into(),
            message: message.into(),
        }
    }
}

impl fmt::Display for Violation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}: {}", self.field, self.message)
    }
}

fn join_violations(v: &[Violation]) -> String {
    v.iter()
        .map(ToString::to_string)
        .collect::<Vec<_>>()
        .join("; ")
}

#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("cannot read {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("parse error in {origin}: {message}")]
    Parse { origin: String, message: String },

    #[error("validation failed: {}", join_violations(.0))]
    Validation(Vec<Violation>),

    #[error("unknown catalog `{0}`")]
    UnknownCatalog(String),

    #[error("unknown signal `{0}`")]
    UnknownSignal(String),

    #[error("unknown victim `{0}`: no noise environment defined")]
    UnknownVictim(String),

    #[error("invalid LFSR tap specification: {0}")]
    InvalidTaps(String),

    #[error("invalid argument `{name}`: {reason}")]
    InvalidArgument { name: &'static str, reason: String },

    #[error("chip stream length mismatch: I has {i} chips, Q has {q}")]
    LengthMismatch { i: usize, q: usize },

    #[error("rates are not commensurate: {0}")]
    NonCommensurate(String),

    #[error("{0} has no closed-form PSD; use the numeric estimator")]
    UnsupportedModulation(String),

    #[error("segment length {segment} exceeds buffer length {len}")]
    SegmentTooLong { segment: usize, len: usize },

    #[error("buffer of {len} samples holds fewer than {min_segments} segments of {segment}")]
    InsufficientData {
        len: usize,
        segment: usize,
        min_segments: usize,
    },

    #[error("fraction {0} outside (0, 1)")]
    FractionOutOfRange(f64),

    #[error("grid [{have_lo:.1}, {have_hi:.1}] Hz does not cover requested band [{need_lo:.1}, {need_hi:.1}] Hz")]
    GridCoverage {
        need_lo: f64,
        need_hi: f64,
        have_lo: f64,
        have_hi: f64,
    },

    #[error("no PSD definition for `{0}`")]
    MissingPsd(String),

    #[error("no satellite is visible at any evaluated (user, time) pair")]
    NeverVisible,

    #[error("sample rate {sample_rate:.0} Hz below required {required:.0} Hz")]
    SampleRateTooLow { sample_rate: f64, required: f64 },

    #[error("coherent time {coherent_time} s is not an integer number of {code_period} s code periods")]
    CoherentTime { coherent_time: f64, code_period: f64 },

    #[error("invalid ramp profile: {0}")]
    InvalidProfile(String),
}

impl Error {
    /// True for errors caused by user input or configuration rather than by a
    /// failed computation.
    pub fn is_config_error(&self) -> bool {
        matches!(
            self,
            Error::Io { .. }
                | Error::Parse { .. }
                | Error::Validation(_)
                | Error::UnknownCatalog(_)
                | Error::UnknownSignal(_)
                | Error::UnknownVictim(_)
                | Error::InvalidTaps(_)
                | Error::InvalidArgument { .. }
                | Error::InvalidProfile(_)
                | Error::SampleRateTooLow { .. }
                | Error::CoherentTime { .. }
                | Error::MissingPsd(_)
        )
    }
}
