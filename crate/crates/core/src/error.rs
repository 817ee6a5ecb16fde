use thiserror::Error;

/// Errors produced by the numerical routines in this crate.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },

    #[error("invalid norm specification: {0}")]
    InvalidNorm(String),

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("the zero vector has no duality selection")]
    ZeroVector,

    #[error("affine constraint system is infeasible (residual {residual:.3e})")]
    Infeasible { residual: f64 },

    #[error("no convergence after {iterations} iterations (residual {residual:.3e})")]
    NoConvergence { iterations: usize, residual: f64 },

    #[error("subspace basis is rank deficient")]
    DegenerateBasis,

    #[error("functionals are linearly dependent")]
    DependentFunctionals,

    #[error("{count} functionals cannot have a nontrivial annihilator in dimension {dim}")]
    TooManyFunctionals { count: usize, dim: usize },

    #[error("operator restricted to the subspace is zero")]
    ZeroRestriction,

    #[error("extension has dual norm {achieved:.12} (limit {limit:.12})")]
    ExtensionNorm { achieved: f64, limit: f64 },

    #[error("biorthogonality violated: max |xi_i(x_j) - delta_ij| = {max_err:.3e}")]
    Biorthogonality { max_err: f64 },

    #[error("norm sequence increased at step {step}: {previous} -> {current}")]
    NonMonotoneNorms {
        step: usize,
        previous: f64,
        current: f64,
    },

    #[error("certificate gap {gap:.3e} at step {step} exceeds abort threshold {limit:.3e}")]
    CertificateGap { step: usize, gap: f64, limit: f64 },

    #[error("index {index} out of range (length {len})")]
    IndexOutOfRange { index: usize, len: usize },

    #[error("unsupported case: {0}")]
    Unsupported(String),

    #[error("step {step}: maximizer is not an eigenvector (residual {residual:.3e})")]
    OutsideEigenClass { step: usize, residual: f64 },

    #[error("fixed-point residual {residual:.3e} above threshold {limit:.3e}")]
    FixedPointResidual { residual: f64, limit: f64 },

    #[error("convex solver failure: {0}")]
    Solver(String),
}

pub type Result<T> = std::result::Result<T, Error>;
