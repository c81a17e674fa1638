use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("non-finite value in {0}")]
    NonFinite(&'static str),

    #[error("invalid goal: {0}")]
    InvalidGoal(String),

    #[error("interpolation nodes are not distinct")]
    DuplicateNodes,

    #[error("polynomial is identically zero")]
    ZeroPolynomial,

    /// No 8-row subset of the goal coefficient matrix is well conditioned.
    #[error("goal coefficient matrix is singular (condition estimate {cond:e})")]
    SingularQ { cond: f64 },

    #[error("characteristic determinant vanishes identically")]
    IdenticallyZeroDeterminant,

    /// Entry degree of the reduced system exceeds the supported bound.
    #[error("reduced system entry degree {0} exceeds the supported bound")]
    DegreeBound(usize),

    #[error("equation term outside the elimination basis: {0}")]
    StructureMismatch(String),

    #[error("no null vector at candidate root")]
    EmptyNullSpace,

    #[error("null vector fails consistency check: {0}")]
    InconsistentNullVector(String),

    #[error("back-substitution inconsistent: {0}")]
    InconsistentSolution(String),

    #[error("no theta4 branch of the collinear family produces a valid path")]
    NoValidBranch,

    #[error("no CSC path reaches the goal")]
    NoSolution,
}
