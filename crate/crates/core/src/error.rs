use num_bigint::BigUint;
use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("the point [0 : 0] does not exist in P^1")]
    ZeroPoint,
    #[error("degree mismatch: expected {expected}, found {found}")]
    DegreeMismatch { expected: usize, found: usize },
    #[error("root refinement did not converge: {0}")]
    ConvergenceFailure(String),
    #[error("degenerate map: resultant of the homogeneous forms is zero")]
    DegenerateMap,
    #[error("DegreeTooLow: map has degree {0}, at least 2 is required")]
    DegreeTooLow(usize),
    #[error("numerator and denominator share a nonconstant factor")]
    CommonFactor,
    #[error("factorization budget exceeded; found {partial:?}, unfactored {remaining:?}")]
    FactorizationTooLarge {
        partial: Vec<BigUint>,
        remaining: Vec<BigUint>,
    },
    #[error("word enumeration needs {needed} words, cap is {cap}")]
    WordCapExceeded { needed: u128, cap: u128 },
    #[error("polynomial is not irreducible over Q: {0}")]
    NotIrreducible(String),
    #[error("the point at infinity is not allowed here")]
    InfinitePoint,
    #[error("forward orbit integer exceeds the bit budget of {budget} bits")]
    IntegerOverflowBudget { budget: u64 },
    #[error("backward tree exceeds node budget of {0}")]
    NodeBudgetExceeded(usize),
    #[error("quadrature failed to converge: {0}")]
    QuadratureFailure(String),
    #[error("ExceptionalStart: the starting point lies in the exceptional set")]
    ExceptionalStart,
    #[error("unsupported structure: {0}")]
    UnsupportedStructure(String),
    #[error("invalid stochastic system: {0}")]
    InvalidSystem(String),
    #[error("invalid argument: {0}")]
    InvalidArgument(String),
}

pub type Result<T> = std::result::Result<T, Error>;
