//! Crate-wide error type and the exit-code contract used by the CLI.

use thiserror::Error;

/// Every fallible operation in this crate returns this error type.
#[derive(Debug, Error)]
pub enum Error {
    // --- configuration errors (exit code 2) ---
    #[error("missing required config key `{0}`")]
    MissingKey(String),
    #[error("unknown config key `{0}`")]
    UnknownKey(String),
    #[error("config key `{key}` has the wrong type: expected {expected}")]
    TypeError { key: String, expected: &'static str },
    #[error("invalid configuration: {0}")]
    InvalidConfig(String),
    #[error("cannot read config file `{path}`: {source}")]
    ConfigIo {
        path: String,
        #[source]
        source: std::io::Error,
    },

    // --- data errors (exit code 3) ---
    #[error("time series is empty")]
    EmptySeries,
    #[error("duplicate timestamp {0} in series")]
    DuplicateTimestamp(String),
    #[error("duplicate modality id `{0}`")]
    DuplicateModality(String),
    #[error("no rows with all modalities valid on the requested grid")]
    NoOverlap,
    #[error("too few rows: need at least {needed}, have {have}")]
    TooFewRows { needed: usize, have: usize },
    #[error("sequence length mismatch: {left} vs {right}")]
    LengthMismatch { left: usize, right: usize },
    #[error("zero variance in input sequence")]
    ZeroVariance,
    #[error("unknown modality `{0}`")]
    UnknownModality(String),
    #[error("requested {requested} predictors but only {available} are ranked")]
    TooManyRequested { requested: usize, available: usize },
    #[error("unknown group `{0}`")]
    UnknownGroup(String),
    #[error("zero-length vector")]
    ZeroVector,
    #[error("target range is zero (max == min)")]
    ZeroRange,
    #[error("modality `{0}` missing from dataset")]
    MissingModality(String),
    #[error("shape mismatch: {0}")]
    ShapeMismatch(String),
    #[error("invalid coupling for target {target}: {reason}")]
    InvalidCoupling { target: usize, reason: String },
    #[error("malformed CSV at {path}:{line}: {reason}")]
    CsvFormat {
        path: String,
        line: u64,
        reason: String,
    },
    #[error("i/o error on `{path}`: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },

    // --- training failures (exit code 4) ---
    #[error("empty {0} split")]
    EmptySplit(&'static str),
    #[error("training failed: {0}")]
    TrainingFailed(String),

    // --- internal invariant violations (exit code 5) ---
    #[error("internal invariant violated: {0}")]
    Internal(String),
}

impl Error {
    /// Process exit code for this error class: 2 config, 3 data, 4 training, 5 internal.
    pub fn exit_code(&self) -> i32 {
        use Error::*;
        match self {
            MissingKey(_) | UnknownKey(_) | TypeError { .. } | InvalidConfig(_)
            | ConfigIo { .. } => 2,
            EmptySeries | DuplicateTimestamp(_) | DuplicateModality(_) | NoOverlap
            | TooFewRows { .. } | LengthMismatch { .. } | ZeroVariance | UnknownModality(_)
            | TooManyRequested { .. } | UnknownGroup(_) | ZeroVector | ZeroRange
            | MissingModality(_) | ShapeMismatch(_) | InvalidCoupling { .. }
            | CsvFormat { .. } | Io { .. } => 3,
            EmptySplit(_) | TrainingFailed(_) => 4,
            Internal(_) => 5,
        }
    }

    /// Short machine-readable class name used in structured error reports.
    pub fn kind(&self) -> &'static str {
        use Error::*;
        match self {
            MissingKey(_) => "missing_key",
            UnknownKey(_) => "unknown_key",
            TypeError { .. } => "type_error",
            InvalidConfig(_) => "invalid_config",
            ConfigIo { .. } => "config_io",
            EmptySeries => "empty_series",
            DuplicateTimestamp(_) => "duplicate_timestamp",
            DuplicateModality(_) => "duplicate_modality",
            NoOverlap => "no_overlap",
            TooFewRows { .. } => "too_few_rows",
            LengthMismatch { .. } => "length_mismatch",
            ZeroVariance => "zero_variance",
            UnknownModality(_) => "unknown_modality",
            TooManyRequested { .. } => "too_many_requested",
            UnknownGroup(_) => "unknown_group",
            ZeroVector => "zero_vector",
            ZeroRange => "zero_range",
            MissingModality(_) => "missing_modality",
            ShapeMismatch(_) => "shape_mismatch",
            InvalidCoupling { .. } => "invalid_coupling",
            CsvFormat { .. } => "csv_format",
            Io { .. } => "io",
            EmptySplit(_) => "empty_split",
            TrainingFailed(_) => "training_failed",
            Internal(_) => "internal",
        }
    }
}

pub type Result<T> = std::result::Result<T, Error>;
