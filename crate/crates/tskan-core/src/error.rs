//! Error type shared across the crate.

use thiserror::Error;

/// Everything that can go wrong while loading data, building features,
/// training, or exporting artifacts.
#[derive(Debug, Error)]
pub enum TskanError {
    #[error("{path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },

    #[error("{path}: {message}")]
    CsvFormat { path: String, message: String },

    #[error("{path}: row {row}: column '{column}': cannot parse '{value}' as a number")]
    NonNumericCell {
        path: String,
        row: usize,
        column: String,
        value: String,
    },

    #[error("missing column '{column}' (have: {available})")]
    MissingColumn { column: String, available: String },

    #[error("sample '{sample_id}': duplicate chunk_index {chunk_index}")]
    DuplicateChunk { sample_id: String, chunk_index: usize },

    #[error("sample '{sample_id}': chunk indices must cover 0..{expected} without gaps")]
    ChunkGap { sample_id: String, expected: usize },

    #[error("sample '{sample_id}': MOS differs across rows ({first} vs {other})")]
    InconsistentLabel {
        sample_id: String,
        first: f64,
        other: f64,
    },

    #[error("sample '{sample_id}': label {label} outside declared range [{lo}, {hi}]")]
    LabelOutOfRange {
        sample_id: String,
        label: f64,
        lo: f64,
        hi: f64,
    },

    #[error("sample '{sample_id}': non-finite value in variable '{variable}'")]
    NonFiniteValue { sample_id: String, variable: String },

    #[error("sample '{sample_id}': length {length} is shorter than the required {required} steps")]
    SampleTooShort {
        sample_id: String,
        length: usize,
        required: usize,
    },

    #[error("sample '{sample_id}': length {length} exceeds the maximum {maximum} steps")]
    SampleTooLong {
        sample_id: String,
        length: usize,
        maximum: usize,
    },

    #[error("dataset is empty")]
    EmptyDataset,

    #[error("dataset has mixed lengths; run length enforcement first (expected {expected}, sample '{sample_id}' has {actual})")]
    MixedLengths {
        expected: usize,
        sample_id: String,
        actual: usize,
    },

    #[error("invalid split: {0}")]
    InvalidSplit(String),

    #[error("split leaves an empty part: train={train}, val={val}, test={test}")]
    EmptySplitPart { train: usize, val: usize, test: usize },

    #[error("need at least {required} rows, got {actual}")]
    InsufficientData { required: usize, actual: usize },

    #[error("dimension mismatch: expected {expected}, got {actual}")]
    DimensionMismatch { expected: usize, actual: usize },

    #[error("empty series")]
    EmptySeries,

    #[error("frequency cutoff {cutoff} out of range (series of length {length} supports 0..={max})")]
    FrequencyCutoff {
        cutoff: usize,
        length: usize,
        max: usize,
    },

    #[error("spectrum of a real series should have |Im X(0)| < 1e-9, got {imag}")]
    NonRealDc { imag: f64 },

    #[error("invalid grid: {0}")]
    InvalidGrid(String),

    #[error("invalid activation: {0}")]
    InvalidActivation(String),

    #[error("invalid config: {0}")]
    InvalidConfig(String),

    #[error("training diverged (non-finite loss) at epoch {epoch}")]
    Diverged { epoch: usize },

    #[error("unknown feature '{0}'")]
    UnknownFeature(String),

    #[error("invalid feature name '{name}': {reason}")]
    BadFeatureName { name: String, reason: String },

    #[error("top-k of {k} exceeds the {available} ranked features")]
    KOutOfRange { k: usize, available: usize },

    #[error("degenerate design matrix: {0}")]
    DegenerateDesign(String),

    #[error("feature schema mismatch: {0}")]
    SchemaMismatch(String),

    #[error("model file {path}: {message}")]
    ModelFormat { path: String, message: String },
}

pub type Result<T> = std::result::Result<T, TskanError>;
