use num_complex::Complex64;
use thiserror::Error;

/// Errors raised by the numerical routines in this crate.
#[derive(Debug, Clone, Error)]
pub enum RatexError {
    #[error("shape mismatch in {op}: {left:?} vs {right:?}")]
    ShapeMismatch { op: &'static str, left: (usize, usize), right: (usize, usize) },

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("non-finite coefficient encountered")]
    NonFinite,

    #[error("determinant is identically zero")]
    SingularDeterminant,

    #[error("coefficient at the expansion origin is singular")]
    SingularLeadingCoefficient,

    #[error("zeros on unit circle (closest modulus {closest_modulus:.12})")]
    ZerosOnUnitCircle { closest_modulus: f64 },

    #[error("expected {expected} zeros inside the unit circle, found {found}")]
    WrongStableCount { expected: usize, found: usize },

    #[error("divisor extraction block is numerically singular (rcond {rcond:.3e})")]
    DivisorExtractionSingular { rcond: f64 },

    #[error("factorization residual {residual:.3e} exceeds tolerance {limit:.3e}")]
    ReconstructionFailed { residual: f64, limit: f64 },

    #[error("C0 has rank {rank} < {required}: canonical form cannot be reached by rotation")]
    RankDeficientC0 { rank: usize, required: usize },

    #[error("transfer function loses rank inside the unit disk at z = {zero}")]
    NotInvertible { zero: Complex64 },

    #[error("B(z) is singular at grid point omega = {omega}")]
    SingularOnGrid { omega: f64 },

    #[error("transfer series horizon {have} is shorter than the required {need}")]
    InsufficientHorizon { have: usize, need: usize },

    #[error("lag bound or dimension mismatch: {0}")]
    LagMismatch(String),

    #[error("restriction error: {0}")]
    Restriction(String),

    #[error("the right-hand side u of a system-wide affine restriction must be non-zero")]
    ZeroRestrictionRhs,

    #[error("restriction residual {residual:.3e} at the model point is not zero")]
    RestrictionNotSatisfied { residual: f64 },

    #[error("parse error at line {line}, column {column}: {message}")]
    Parse { line: usize, column: usize, message: String },

    #[error("division by zero while evaluating {0}")]
    DivisionByZero(String),

    #[error("evaluation failed: {0}")]
    Evaluation(String),

    #[error("operation requires a VARMA model (lambda = 0), got lambda = {0}")]
    NotVarma(usize),
}

impl RatexError {
    /// Short stable name of the variant, used in reports.
    pub fn kind(&self) -> &'static str {
        match self {
            RatexError::ShapeMismatch { .. } => "ShapeMismatch",
            RatexError::InvalidArgument(_) => "InvalidArgument",
            RatexError::NonFinite => "NonFinite",
            RatexError::SingularDeterminant => "SingularDeterminant",
            RatexError::SingularLeadingCoefficient => "SingularLeadingCoefficient",
            RatexError::ZerosOnUnitCircle { .. } => "ZerosOnUnitCircle",
            RatexError::WrongStableCount { .. } => "WrongStableCount",
            RatexError::DivisorExtractionSingular { .. } => "DivisorExtractionSingular",
            RatexError::ReconstructionFailed { .. } => "ReconstructionFailed",
            RatexError::RankDeficientC0 { .. } => "RankDeficientC0",
            RatexError::NotInvertible { .. } => "NotInvertible",
            RatexError::SingularOnGrid { .. } => "SingularOnGrid",
            RatexError::InsufficientHorizon { .. } => "InsufficientHorizon",
            RatexError::LagMismatch(_) => "LagMismatch",
            RatexError::Restriction(_) => "Restriction",
            RatexError::ZeroRestrictionRhs => "ZeroRestrictionRhs",
            RatexError::RestrictionNotSatisfied { .. } => "RestrictionNotSatisfied",
            RatexError::Parse { .. } => "Parse",
            RatexError::DivisionByZero(_) => "DivisionByZero",
            RatexError::Evaluation(_) => "Evaluation",
            RatexError::NotVarma(_) => "NotVarma",
        }
    }

    /// True for failures of the existence/uniqueness condition.
    pub fn is_eu_failure(&self) -> bool {
        matches!(
            self,
            RatexError::ZerosOnUnitCircle { .. }
                | RatexError::WrongStableCount { .. }
                | RatexError::DivisorExtractionSingular { .. }
                | RatexError::ReconstructionFailed { .. }
                | RatexError::SingularDeterminant
        )
    }
}

pub type Result<T> = std::result::Result<T, RatexError>;
