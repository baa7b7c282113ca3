use thiserror::Error;

use crate::poly::MultiIndex;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },

    #[error("matrix is not square ({rows}x{cols})")]
    NotSquare { rows: usize, cols: usize },

    #[error("group element {index} is not orthogonal")]
    NotOrthogonal { index: usize },

    #[error("group element {index} duplicates element {duplicate_of}")]
    DuplicateElement { index: usize, duplicate_of: usize },

    #[error("element set does not contain the identity")]
    MissingIdentity,

    #[error("element set is not closed: product of elements {left} and {right} is not in the set")]
    NotClosed { left: usize, right: usize },

    #[error("unsupported group: {0}")]
    UnsupportedGroup(String),

    #[error("generator list is empty")]
    NoGenerators,

    #[error("generator {index} is the zero polynomial")]
    ZeroGenerator { index: usize },

    #[error("generator {index} is not homogeneous")]
    NotHomogeneous { index: usize },

    /// `witness` names the group element (or quadrature description) exposing the defect.
    #[error("polynomial {index} is not invariant (witness: {witness}; defect: {defect})")]
    NotInvariant {
        index: usize,
        witness: String,
        defect: String,
    },

    #[error("degree-{degree} component is not in the generator algebra (residual: {residual})")]
    NotExpressible { degree: u32, residual: String },

    #[error("reynolds image of x^{index} is not expressible in the generators at degree {degree}")]
    IncompleteGenerators { index: MultiIndex, degree: u32 },

    #[error("index {index} out of range (len {len})")]
    IndexOutOfRange { index: usize, len: usize },

    #[error("coefficient table depth {depth} is insufficient (need at least {required})")]
    InsufficientDepth { depth: u32, required: u32 },

    #[error("special assumption fails: J={j:?}, J'={j_prime:?} pair to {value}")]
    SpecialAssumptionFails {
        j: MultiIndex,
        j_prime: MultiIndex,
        value: String,
    },

    #[error("support radius {support} exceeds quadrature box half-width {half_width}")]
    SupportViolation { support: f64, half_width: f64 },

    #[error("function fails invariance audit: |f(k.x) - f(x)| = {defect:e} at x = {x:?}")]
    InvarianceAudit { defect: f64, x: Vec<f64> },

    #[error("truncation unstable: doubling changes result by {delta:e} (tolerance {tol:e})")]
    UnstableTruncation { delta: f64, tol: f64 },

    #[error("quadrature dimension {0} is not supported (1..=3)")]
    QuadratureDimension(usize),

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("parse error: {0}")]
    Parse(String),
}

impl From<serde_json::Error> for Error {
    fn from(e: serde_json::Error) -> Self {
        Error::Parse(e.to_string())
    }
}
