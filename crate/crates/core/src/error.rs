use thiserror::Error;

use crate::infomin::MinimizerReport;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Clone, Error)]
pub enum Error {
    #[error("axis `{0}` is not part of the state space")]
    UnknownAxis(String),
    #[error("axis name `{0}` appears more than once")]
    DuplicateAxis(String),
    #[error("axis `{name}` has {card} states; at least 2 are required")]
    Cardinality { name: String, card: usize },
    #[error("shape mismatch: expected {expected:?}, found {found:?}")]
    ShapeMismatch { expected: Vec<usize>, found: Vec<usize> },
    #[error("entry {index} is not a finite nonnegative probability ({value})")]
    InvalidMass { index: usize, value: f64 },
    #[error("probabilities sum to {0}, expected 1")]
    NotNormalized(f64),
    #[error("tangent entries sum to {0}, expected 0")]
    NotTangent(f64),
    #[error("invalid axis partition: {0}")]
    InvalidPartition(String),
    #[error("conditioning event {axis}={state} has probability zero")]
    ZeroProbabilityEvent { axis: String, state: usize },
    #[error("support mismatch at state {0:?}: first argument has mass where the second has none")]
    SupportMismatch(Vec<usize>),
    #[error("zero probability at state {0:?} along a nonzero direction")]
    ZeroProbabilityOnDirection(Vec<usize>),
    #[error("inconsistent marginals: {0}")]
    InconsistentMarginals(String),
    #[error("coordinate {coord} leaves the domain at state {state:?} (value {value:e})")]
    OutOfDomain { coord: usize, state: Vec<usize>, value: f64 },
    #[error("distribution is not in the correlation domain (marginal deviation {0:e})")]
    NotInDomain(f64),
    #[error("optimizer did not converge within {iterations} iterations (gap {gap:e})")]
    NonConvergence { iterations: usize, gap: f64, best: Box<MinimizerReport> },
    #[error("precondition violated: {0}")]
    Precondition(String),
    #[error("corner point ({s}, {t}) is not strictly inside the unit square")]
    VertexDegenerate { s: f64, t: f64 },
    #[error("matrix is not rank one (determinant {0:e})")]
    NotOnSegre(f64),
    #[error("covariance matrix is not positive definite")]
    NotPositiveDefinite,
    #[error("feasible covariance interval is empty")]
    InfeasibleCovariance,
}
