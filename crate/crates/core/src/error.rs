use alloc::string::String;

/// Every failure the engines can report.
#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum Error {
    #[error("invalid input: {0}")]
    InvalidInput(String),
    #[error("matrix is not positive semidefinite (min eigenvalue {min_eigenvalue:e})")]
    NotPsd { min_eigenvalue: f64 },
    #[error("matrix columns are not orthonormal (residual {residual:e})")]
    NotIsometry { residual: f64 },
    #[error("leading block is singular")]
    SingularBlock,
    #[error("exponents are not Hölder conjugate (1/p1 + 1/p2 - 1 = {defect:e})")]
    NotConjugate { defect: f64 },
    #[error("degenerate configuration: {0}")]
    Degenerate(String),
    #[error("exponent vector lies outside the eligible region (norm {norm})")]
    NotEligible { norm: f64 },
    #[error("kernel of T - P is trivial, no equality witness exists")]
    NoWitness,
    #[error("integrand returned a non-finite value at {0}")]
    IntegrandError(String),
    #[error("exponent equal to 1 makes the condition degenerate")]
    DegenerateExponent,
    #[error("invalid exponent: {0}")]
    InvalidExponent(String),
    #[error("not applicable: {0}")]
    NotApplicable(String),
    #[error("assumption failed: {what} (residual {residual:e})")]
    AssumptionFailed { what: String, residual: f64 },
    #[error("hypothesis violated at x = {x}, y = {y}")]
    HypothesisFailed { x: f64, y: f64 },
    #[error("input is not a probability density (mass {mass})")]
    NotDensity { mass: f64 },
    #[error("normalization mismatch: {0}")]
    NormalizationFailed(String),
}

pub type Result<T> = core::result::Result<T, Error>;
