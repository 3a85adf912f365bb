//! Error type shared by the whole pipeline.

use thiserror::Error;

/// Errors produced by signal ingestion, the detection/description pipeline
/// and the classifier.
#[derive(Debug, Error)]
pub enum Error {
    #[error("line {line}: {message}")]
    Parse { line: usize, message: String },

    #[error("line {line}: non-uniform time spacing (step {found}, expected {expected})")]
    NonUniformSpacing {
        line: usize,
        expected: f64,
        found: f64,
    },

    #[error("line {line}: non-finite value")]
    NonFinite { line: usize },

    #[error("too few samples: got {found}, need at least 2")]
    TooFewSamples { found: usize },

    #[error("invalid sample rate {rate} (must be positive and finite)")]
    InvalidSampleRate { rate: f64 },

    #[error("resampled output would have {output_len} samples, need at least 2")]
    ResampleTooShort { output_len: usize },

    #[error("shape `{shape}` takes {expected} parameters, got {found}")]
    BadShapeParams {
        shape: &'static str,
        expected: usize,
        found: usize,
    },

    #[error("unknown base shape `{0}`")]
    UnknownShape(String),

    #[error("invalid parameter: {0}")]
    InvalidParam(String),

    #[error("kernel of length {kernel_len} does not fit signal of length {signal_len}")]
    KernelTooLong {
        kernel_len: usize,
        signal_len: usize,
    },

    #[error("signal supports only {levels} scale levels, need at least {required}")]
    TooFewLevels { levels: usize, required: usize },

    #[error("scale space has {levels} levels, need at least {required}")]
    TooFewDogLevels { levels: usize, required: usize },

    #[error("signal of length {len} too short for extrema search (need more than {min})")]
    SignalTooShort { len: usize, min: usize },

    #[error("sequence element dimensions differ: {left} vs {right}")]
    DimensionMismatch { left: usize, right: usize },

    #[error("empty sequence passed to dtw")]
    EmptySequence,

    #[error("training entry {index} ({label}): {source}")]
    TrainingEntry {
        index: usize,
        label: String,
        #[source]
        source: Box<Error>,
    },

    #[error("class `{label}` has a single instance; leave-one-out needs at least 2")]
    SingleInstanceClass { label: String },

    #[error("training set is empty")]
    EmptyTrainingSet,

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
