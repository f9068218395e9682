use thiserror::Error;

/// Errors surfaced by the numerical routines.
#[derive(Debug, Clone, Error, PartialEq)]
pub enum Error {
    #[error("flow integration diverged: {0}")]
    FlowDivergence(String),
    #[error("point lies too close to a chart pole: {0}")]
    ChartPole(String),
    #[error("Newton iteration stalled after {iterations} iterations (residual {residual:e})")]
    NewtonStall { iterations: usize, residual: f64 },
    #[error("pulled-back area density is not positive ({0:e})")]
    NonPositiveDensity(f64),
    #[error("degenerate gauge anchors")]
    DegenerateAnchors,
    #[error("metric is singular at the requested point")]
    SingularMetric,
    #[error("finite-difference step too large: Richardson estimate {0:e}")]
    StepTooLarge(f64),
    #[error("integration step budget exceeded after {0} steps")]
    StepBudgetExceeded(usize),
    #[error("geodesic failed to reach the future boundary (stopped at T = {0})")]
    TrappedGeodesic(f64),
    #[error("Jacobi determinant changed sign {0} times")]
    MultipleSignChanges(usize),
    #[error("rank deficient system: expected nullity {expected}, found {found}")]
    RankDeficient { expected: usize, found: usize },
    #[error("continuation step collapsed at parameter {parameter}")]
    StepCollapse { parameter: f64 },
    #[error("doubled degree {0} is not close to an integer")]
    NonIntegral(f64),
    #[error("boundary zero structure is ambiguous")]
    AmbiguousZeros,
    #[error("null-cone fit failed: {0}")]
    ConeFitFailure(String),
    #[error("disk derivative vanishes on the closed disk")]
    DerivativeZero,
    #[error("invalid configuration: {0}")]
    ConfigInvalid(String),
    #[error("i/o failure: {0}")]
    IoFailure(String),
}

pub type Result<T> = std::result::Result<T, Error>;
