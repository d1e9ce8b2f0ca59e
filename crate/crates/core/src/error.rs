use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid mesh parameter: {0}")]
    InvalidMesh(String),
    #[error("mesh pair {coarse}/{fine} is not nested: fine subdivisions must be a multiple of coarse subdivisions")]
    NotNested { coarse: usize, fine: usize },
    #[error("element index {index} out of range (mesh has {count} elements)")]
    InvalidElement { index: usize, count: usize },
    #[error("dimension mismatch in {context}: expected {expected}, got {actual}")]
    DimensionMismatch {
        context: &'static str,
        expected: usize,
        actual: usize,
    },
    #[error("mesh mismatch in {context}: field lives on n_sub={actual}, operation expects n_sub={expected}")]
    MeshMismatch {
        context: &'static str,
        expected: usize,
        actual: usize,
    },
    #[error("invalid parameter `{name}`: {reason}")]
    InvalidParameter { name: &'static str, reason: String },
    #[error("factorization failed in {context}: {reason}")]
    Factorization { context: String, reason: String },
    #[error("corrector for seed element {seed} failed: {source}")]
    Corrector {
        seed: usize,
        #[source]
        source: Box<Error>,
    },
    #[error("time step {step} failed: {source}")]
    Step {
        step: usize,
        #[source]
        source: Box<Error>,
    },
    #[error("zero nodal modulus at node {node} during renormalization")]
    ZeroModulus { node: usize },
    #[error("non-finite value produced in {0}")]
    NonFinite(&'static str),
}

pub type Result<T> = std::result::Result<T, Error>;
