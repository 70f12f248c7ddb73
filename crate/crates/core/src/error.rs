use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("degree mismatch: {left} vs {right}")]
    DegreeMismatch { left: usize, right: usize },

    #[error("not a permutation: {0}")]
    NotAPermutation(String),

    #[error("index {index} out of range for degree {degree}")]
    IndexOutOfRange { index: usize, degree: usize },

    #[error("group enumeration exceeded the cap of {cap} elements")]
    CapExceeded { cap: usize },

    #[error("permutation does not preserve the face blocks: {0}")]
    NotBlockPreserving(String),

    #[error("generator {index} is not an element of the parent group")]
    NotAMember { index: usize },

    #[error("unsupported: {0}")]
    Unsupported(String),

    #[error("weight length mismatch: expected {expected}, got {got}")]
    WeightLength { expected: usize, got: usize },

    #[error("shape mismatch: {0}")]
    Shape(String),

    #[error("padding graph closure produced conflicting sources at node {node}, side {side}")]
    PaddingConflict { node: usize, side: usize },

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("non-finite value at index {0}")]
    NonFinite(usize),

    #[error("io error: {0}")]
    Io(#[from] std::io::Error),

    #[error("json error: {0}")]
    Json(#[from] serde_json::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
