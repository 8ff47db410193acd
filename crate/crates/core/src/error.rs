use std::path::PathBuf;

/// Errors produced anywhere in the forecasting pipeline.
#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("line {line}: malformed row: {reason}")]
    MalformedRow { line: usize, reason: String },
    #[error("timestamps are not strictly increasing at line {line}")]
    NonMonotoneTimestamps { line: usize },
    #[error("input file contains no data rows")]
    EmptyFile,
    #[error("series has a missing value at its {0} boundary")]
    BoundaryGap(&'static str),
    #[error("every value in the series is missing")]
    AllMissing,
    #[error("series of length {len} is shorter than window size {window}")]
    SeriesTooShort { len: usize, window: usize },
    #[error("need at least {needed} items, got {got}")]
    TooFewItems { needed: usize, got: usize },
    #[error("window is empty")]
    EmptyWindow,
    #[error("need at least {needed} granules, got {got}")]
    TooFewGranules { needed: usize, got: usize },
    #[error("need more than {lag} feature records, got {got}")]
    TooFewRecords { lag: usize, got: usize },
    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },
    #[error("sequence of length {len} is shorter than kernel size {kernel}")]
    SequenceTooShort { len: usize, kernel: usize },
    #[error("model has not been trained")]
    UntrainedModel,
    #[error("tent map seed {0} must lie strictly inside (0, 1)")]
    InvalidSeed(f64),
    #[error("objective vector contains a non-finite value")]
    NonFiniteObjective,
    #[error("point {0:?} lies outside the unit box")]
    OutOfDomain(Vec<f64>),
    #[error("archive is empty")]
    EmptyArchive,
    #[error("length mismatch: {0} vs {1}")]
    LengthMismatch(usize, usize),
    #[error("actual values are zero")]
    ZeroActual,
    #[error("actual values have zero variance")]
    ZeroVariance,
    #[error("actual values have zero range")]
    ZeroRange,
    #[error("interval lower bound exceeds upper bound at index {0}")]
    CrossedBounds(usize),
    #[error("need at least {needed} residuals, got {got}")]
    TooFewResiduals { needed: usize, got: usize },
    #[error("series too short: need at least {needed}, got {got}")]
    TooShort { needed: usize, got: usize },
    #[error("denominator is zero")]
    ZeroDenominator,
    #[error("unknown problem `{0}`")]
    UnknownProblem(String),
    #[error("invalid configuration: {0}")]
    InvalidConfig(String),
    #[error("model file: {0}")]
    ModelFormat(String),
    #[error("{stage}: {source}")]
    Stage {
        stage: &'static str,
        #[source]
        source: Box<Error>,
    },
}

pub type Result<T> = std::result::Result<T, Error>;

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    /// Wraps an error with the name of the pipeline stage that raised it.
    pub fn in_stage(self, stage: &'static str) -> Self {
        Error::Stage {
            stage,
            source: Box::new(self),
        }
    }
}
