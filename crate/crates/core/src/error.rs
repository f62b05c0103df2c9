use thiserror::Error;

/// Errors raised by the set calculus, the group operations, gain design
/// and the filters built on top of them.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("dimension mismatch in {op}: expected {expected}, got {got}")]
    DimensionMismatch {
        op: &'static str,
        expected: usize,
        got: usize,
    },

    #[error("reduction order {order} must exceed the zonotope dimension {dim}")]
    InvalidReductionOrder { order: usize, dim: usize },

    #[error("matrix is not an element of se(2): {0}")]
    MalformedAlgebra(&'static str),

    #[error("rotation angle {0} is outside the principal branch (-pi, pi) of the logarithm")]
    LogBranch(f64),

    #[error("pair (A, C) is not observable (observability rank {rank} < {n})")]
    Unobservable { rank: usize, n: usize },

    #[error("requested poles are not closed under complex conjugation")]
    PolesNotConjugate,

    #[error("requested pole {0} is not strictly inside the unit circle")]
    UnstablePole(String),

    #[error("expected {expected} poles, got {got}")]
    PoleCount { expected: usize, got: usize },

    #[error("pole placement failed: {0}")]
    PlacementFailed(String),

    #[error("innovation matrix S is singular; measurement-noise model is degenerate")]
    SingularInnovation,

    #[error("operation supports only left-invariant group zonotopes")]
    UnsupportedSide,

    #[error("length mismatch: {0} vs {1}")]
    LengthMismatch(usize, usize),

    #[error("baseline metric is zero; improvement is undefined")]
    ZeroBaseline,

    #[error("invalid configuration field `{field}`: {reason}")]
    InvalidConfig { field: &'static str, reason: String },

    #[error("linear program failed: {0}")]
    LinearProgram(String),
}

pub type Result<T> = std::result::Result<T, Error>;
