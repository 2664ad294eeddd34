use conic::{BackendError, BbError, SolveStatus};
use thiserror::Error;

#[derive(Debug, Error)]
pub enum DroError {
    #[error("second stage infeasible: complete recourse (slack penalization) is violated")]
    CompleteRecourseViolated,
    #[error("program infeasible")]
    Infeasible,
    #[error("solver returned status {0:?} where Optimal was required")]
    SolverStatus(SolveStatus),
    #[error("sample {index} lies outside the declared support")]
    SampleOutsideSupport { index: usize },
    #[error("empty sample set")]
    EmptySample,
    #[error("support enumeration exceeds the guard of {size_bound} points")]
    SupportTooLarge { size_bound: usize },
    #[error("sign condition fails on column {column}: mixed-sign T0/Q entries")]
    SignConditionViolated { column: usize },
    #[error("penalty reformulation requires fixed recourse, but some W_j is nonzero")]
    FixedRecourseViolated,
    #[error("linearized reformulation requires a priori dual bounds (lambda_bar)")]
    MissingBounds,
    #[error("indicator reformulation requires an indicator specification")]
    MissingIndicatorSpec,
    #[error("metric {0} is not representable on this path")]
    UnsupportedMetric(&'static str),
    #[error("penalty parameter must be positive, got {0}")]
    NonPositiveRho(f64),
    #[error("cvar level must lie in (0, 1], got {0}")]
    BadCvarLevel(f64),
    #[error("lifted program would exceed the size cap: {vars} variables > {cap}")]
    SizeCapExceeded { vars: usize, cap: usize },
    #[error("iteration cap reached; best bounds: lower {lower}, upper {upper}")]
    MaxIterReached { lower: f64, upper: f64 },
    #[error("relaxation mode {0} needs a backend capability that is unavailable")]
    CapabilityMismatch(&'static str),
    #[error("instance schema version {got} unsupported (expected {want})")]
    SchemaVersion { got: u32, want: u32 },
    #[error("malformed instance: {0}")]
    BadInstance(#[from] serde_json::Error),
    #[error(transparent)]
    Backend(#[from] BackendError),
    #[error(transparent)]
    BranchBound(#[from] BbError),
    #[error("{0}")]
    Invalid(String),
}
