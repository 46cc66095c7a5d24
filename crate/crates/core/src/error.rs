use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum Error {
    #[error("modulus {0} is not prime")]
    NotPrime(u64),
    #[error("modulus {0} too small (need q >= 3)")]
    FieldTooSmall(u64),
    #[error("elements from GF({0}) and GF({1}) cannot be combined")]
    FieldMismatch(u64, u64),
    #[error("zero has no multiplicative inverse")]
    ZeroInverse,

    #[error("dimension mismatch: {0}")]
    Dimension(String),
    #[error("matrix is singular")]
    Singular,
    #[error("duplicate evaluation point {0}")]
    DuplicateEval(u64),

    #[error("invalid topology: {0}")]
    Topology(String),
    #[error("node {0} does not exist")]
    NoSuchNode(usize),

    #[error("invalid code parameters: {0}")]
    Params(String),
    #[error("reconstruction failed: subset {0:?} is rank deficient")]
    NotMds(Vec<usize>),

    #[error("infeasible linear program")]
    Infeasible,
    #[error("unbounded linear program")]
    Unbounded,
    #[error("instance too large for exhaustive search: {0}")]
    TooLarge(String),

    #[error("no valid split: {0}")]
    NoSplit(String),
    #[error("residual interference left after cancellation at node {0}")]
    ResidualInterference(usize),
    #[error("unsupported by scheme: {0}")]
    Unsupported(String),
}

pub type Result<T> = std::result::Result<T, Error>;
