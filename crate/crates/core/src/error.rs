use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum Error {
    #[error("invalid input: {0}")]
    Invalid(String),
    #[error("stage {stage} is beyond what the generator can produce")]
    StageBeyondGenerator { stage: usize },
    #[error("stage mismatch: {0}")]
    StageMismatch(String),
    #[error("arity mismatch: expected {expected} coordinates, found {found}")]
    Arity { expected: u64, found: u64 },
    #[error("{what} too large to expand explicitly ({size} entries)")]
    TooLarge { what: &'static str, size: String },
    #[error("missing sample of the function at {0}")]
    MissingSample(String),
    #[error("count mismatch: {left} vs {right}")]
    CountMismatch { left: u64, right: u64 },
    #[error("infeasible: {0}")]
    Infeasible(String),
    #[error("precondition failed: {0}")]
    Precondition(String),
    #[error("not applicable: {0}")]
    NotApplicable(String),
    #[error("parse error: {0}")]
    Parse(String),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
