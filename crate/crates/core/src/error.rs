//! Crate-wide error type.

use thiserror::Error;

/// Errors produced by stream validation, gating, evaluation, simulation,
/// and profiling.
#[derive(Debug, Error)]
pub enum Error {
    #[error("probability vector has {len} entries, expected {expected}")]
    WrongArity { len: usize, expected: usize },

    #[error("probabilities must sum to 1.0 within {tolerance} (frame {t} sums to {sum})")]
    NotASimplex { t: u64, sum: f64, tolerance: f64 },

    #[error("probability out of [0, 1] for class {class_id} at frame {t}: {value}")]
    OutOfRange { t: u64, class_id: u8, value: f64 },

    #[error("class id {0} outside 1..=17")]
    InvalidClassId(u8),

    #[error("frame times must be strictly increasing (saw t={t} after t={prev})")]
    NonMonotonicTime { prev: u64, t: u64 },

    #[error("labels must cover contiguous frames (saw t={t} after t={prev})")]
    NonContiguousLabels { prev: u64, t: u64 },

    #[error("invalid event interval: t_start={t_start} > t_end={t_end}")]
    InvalidInterval { t_start: u64, t_end: u64 },

    #[error("evaluated duration must cover at least one frame")]
    ZeroDuration,

    #[error("fragmentation is undefined without ground-truth events")]
    NoGtEvents,

    #[error("timing log contains no records")]
    EmptyLog,

    #[error("invalid frame rate: {0}")]
    InvalidFrameRate(f64),

    #[error("invalid gate config: {0}")]
    InvalidConfig(String),

    #[error("invalid class map: {0}")]
    InvalidMap(String),

    #[error("invalid stream spec: {0}")]
    InvalidSpec(String),

    #[error("class counts must all be positive (class {class_id} has count 0)")]
    ZeroCount { class_id: u8 },

    #[error("focal loss requires p_true in (0, 1], got {0}")]
    DegenerateProbability(f64),

    #[error("invalid loss parameter: {0}")]
    InvalidLossParameter(String),

    #[error("negative or non-finite stage latency at frame {t}: {stage}={value} ms")]
    InvalidStageTiming {
        t: u64,
        stage: &'static str,
        value: f64,
    },

    #[error("line {line}: {message}")]
    Parse { line: usize, message: String },

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
