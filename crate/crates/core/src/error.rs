use thiserror::Error;

/// Errors raised by construction, evaluation and certification routines.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("dimension hypothesis m+1 <= k < 2m-1 violated for m={m}, k={k}")]
    DimensionHypothesisViolated { m: usize, k: usize },
    #[error("contraction ratio {gamma} is not below 1 in faithful mode")]
    NotContracting { gamma: f64 },
    #[error("ball packing infeasible: {0}")]
    PackingInfeasible(String),
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),
    #[error("point is not on the unit sphere (|x| = {norm})")]
    NotOnSphere { norm: f64 },
    #[error("zero vector has no central projection")]
    ZeroVector,
    #[error("fiber tracing diverged: {0}")]
    TraceDiverged(String),
    #[error("curves are too close for a stable linking integral (min distance {0})")]
    CurvesTooClose(f64),
    #[error("stereographic pole lies on a curve")]
    ProjectionPoleOnCurve,
    #[error("transport of ball {moving} obstructed by ball {blocker} (clearance {clearance})")]
    TubeObstructed {
        moving: usize,
        blocker: usize,
        clearance: f64,
    },
    #[error("point lies inside the excluded ball of cell {cell}")]
    InsideExcludedBall { cell: usize },
    #[error("point coincides with the center of cell {cell}")]
    CellCenterSingularity { cell: usize },
    #[error("map evaluation failed: {0}")]
    EvaluationFailed(String),
    #[error("grid too coarse: spacing {spacing} exceeds smoothing scale {epsilon}")]
    GridTooCoarse { spacing: f64, epsilon: f64 },
    #[error("point outside the surrogate box")]
    OutOfBox,
    #[error("serialization error: {0}")]
    Serialization(String),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;

impl From<serde_json::Error> for Error {
    fn from(e: serde_json::Error) -> Self {
        Error::Serialization(e.to_string())
    }
}
