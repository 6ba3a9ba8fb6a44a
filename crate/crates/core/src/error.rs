use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

/// Every failure the library can report, grouped by the stage that raises it.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    // feature extraction
    #[error("insufficient data: need at least {needed} samples, got {got}")]
    InsufficientData { needed: usize, got: usize },
    #[error("degenerate series: standard deviation is zero")]
    DegenerateSeries,
    #[error("heart-rate stream too sparse: {present} minutes present, need {needed}")]
    TooSparse { present: usize, needed: usize },
    #[error("histogram has no observations")]
    EmptyHistogram,
    #[error("insufficient sleep/wake coverage: {0}")]
    InsufficientCoverage(String),
    #[error("no history in the previous {window} days")]
    NoHistory { window: usize },
    #[error("unknown participant `{0}`")]
    UnknownParticipant(String),
    #[error("no survey for participant `{participant}` on {date}")]
    MissingSurvey { participant: String, date: String },
    #[error("invalid stream: {0}")]
    InvalidStream(String),

    // statistics
    #[error("degenerate variance: {0}")]
    DegenerateVariance(String),
    #[error("contingency table has a zero expected count at ({row}, {col})")]
    ZeroExpected { row: usize, col: usize },
    #[error("too few samples: need at least {needed}, got {got}")]
    TooFewSamples { needed: usize, got: usize },
    #[error("comparison needs both roles, found only {0}")]
    SingleGroup(String),
    #[error("degenerate groups: {0}")]
    DegenerateGroups(String),
    #[error("insufficient rows: need at least {needed}, got {got}")]
    InsufficientRows { needed: usize, got: usize },

    // networks
    #[error("shape mismatch: {0}")]
    ShapeMismatch(String),
    #[error("class index {class} out of range for {n_classes} classes")]
    InvalidClass { class: usize, n_classes: usize },
    #[error("training diverged at epoch {epoch}: loss = {loss}")]
    DivergenceDetected { epoch: usize, loss: f64 },
    #[error("model has not been trained")]
    UntrainedModel,
    #[error("invalid variant configuration: {0}")]
    InvalidVariant(String),
    #[error("unknown role `{0}`")]
    UnknownRole(String),
    #[error("batch is empty")]
    EmptyBatch,
    #[error("non-finite value produced in {0}")]
    NonFinite(String),

    // experiment harness
    #[error("label {0} outside [0, 100]")]
    OutOfRange(f64),
    #[error("dataset too small: need at least {needed} rows, got {got}")]
    TooSmall { needed: usize, got: usize },

    // synthetic cohort
    #[error("infeasible cohort spec: {0}")]
    InfeasibleSpec(String),
    #[error("calibration failure: {0}")]
    CalibrationFailure(String),

    // I/O and configuration
    #[error("data error: {0}")]
    Data(String),
    #[error("config error: {0}")]
    Config(String),
    #[error("io error: {0}")]
    Io(String),
}

impl From<std::io::Error> for Error {
    fn from(e: std::io::Error) -> Self {
        Error::Io(e.to_string())
    }
}

impl From<csv::Error> for Error {
    fn from(e: csv::Error) -> Self {
        Error::Data(e.to_string())
    }
}
