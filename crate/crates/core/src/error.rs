use thiserror::Error;

/// Errors raised by the curvature toolkit.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("invalid complex dimension {0}: must be at least 1")]
    InvalidDimension(i64),
    #[error("dimension too small: {0}")]
    DimensionTooSmall(String),
    #[error("degree {degree} out of range for real dimension {dim}")]
    DegreeOutOfRange { degree: usize, dim: usize },
    #[error("expected a form of degree {expected}, got degree {got}")]
    WrongDegree { expected: usize, got: usize },
    #[error("objects live on different spaces (n = {0} vs n = {1})")]
    SpaceMismatch(usize, usize),
    #[error("resource limit: {0}")]
    ResourceLimit(String),
    #[error("degenerate sample: {0}")]
    DegenerateSample(String),
    #[error("degenerate plane: Gram determinant {0:e}")]
    DegeneratePlane(f64),
    #[error("degenerate vector: zero length")]
    ZeroVector,
    #[error("precondition violated: {0}")]
    Precondition(String),
    #[error("identity system is singular: {0}")]
    IdentityInconsistency(String),
    #[error("tensor is not negatively curved: k_max = {0}")]
    NotNegativelyCurved(f64),
    #[error("invalid Chern index: {0}")]
    InvalidIndex(String),
    #[error("degenerate denominator: |gamma_J| = {0:e}")]
    DegenerateDenominator(f64),
    #[error("Chern form has imaginary residue {0:e}")]
    NonRealForm(f64),
    #[error("empty input: {0}")]
    EmptyInput(String),
    #[error("too many non-converged samples: {excluded} of {total}")]
    ExcessiveNonConvergence { excluded: usize, total: usize },
    #[error("malformed tensor file: {0}")]
    Format(String),
    #[error("i/o error: {0}")]
    Io(String),
}

pub type Result<T> = std::result::Result<T, Error>;
