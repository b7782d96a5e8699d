use alloc::string::String;

pub type Result<T> = core::result::Result<T, Error>;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum Error {
    #[error("probability vector is empty")]
    EmptyProbabilities,
    #[error("probability {value} at class {class} is negative or not finite")]
    InvalidProbability { class: usize, value: f64 },
    #[error("probability-sum violation: probabilities sum to {sum}")]
    ProbabilitySum { sum: f64 },
    #[error("label {label} out of range for {classes} classes")]
    LabelOutOfRange { label: usize, classes: usize },
    #[error("class count mismatch: expected {expected}, found {found}")]
    ClassCountMismatch { expected: usize, found: usize },
    #[error("too few records: need at least 1 member and 2 nonmembers, got {members} and {nonmembers}")]
    TooFewRecords { members: usize, nonmembers: usize },
    #[error("{0} must not be empty")]
    Empty(&'static str),
    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },
    #[error("invalid configuration: {0}")]
    InvalidConfig(String),
    #[error("score `{0}` requires configuration that was not supplied")]
    MissingScoreConfig(String),
    #[error("unknown score `{0}`")]
    UnknownScore(String),
    #[error("soft labels need at least 2 classes")]
    SingleClass,
    #[error("model oracle failed: {0}")]
    Oracle(String),
    #[error("enumeration guard exceeded: {0}")]
    SizeGuard(String),
    #[error("training diverged at epoch {epoch}: mean loss is not finite")]
    Diverged { epoch: usize },
    #[error("duplicate metric `{0}`")]
    DuplicateMetric(String),
}
