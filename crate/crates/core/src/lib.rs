//! Deflation-based representations `Tx = Σ ξₙ(x)·Txₙ` of dense operators
//! between finite-dimensional normed spaces (`ℓᵖ` and mixed `(k,1)` / `(k,∞)`
//! norms), with certificates and exact oracles for verification.

pub mod deflation;
pub mod eigen;
pub mod error;
pub mod io;
mod linalg;
pub mod operators;
pub mod representation;
pub mod spaces;
pub mod verify;

pub use error::{Error, Result};
pub use spaces::{
    dist_to_subspace, dual_norm, duality_select, min_norm_affine, norm, DualityConfig, Functional,
    NormKind, NormSpec, Scalar, SubspaceBasis, TieBreak, Vector,
};
pub use operators::{
    adjoint_apply, annihilator_basis, apply, op_norm_oracle, op_norm_power, DenseOperator, NormAttainResult,
    PowerConfig,
};
pub use deflation::{
    biortho_error, deflate_step, dual_projection_r, hahn_banach_extend, projection_s, quotient_projection_norm,
    run_deflation, xi_recursion, Decomposition, DecompositionKind, DeflationConfig, DeflationStep, Diagnostics,
};
pub use eigen::{eigen_deflate, fixed_point_functional, fixed_point_on, make_mixed_diagonal, nonneg_eigen_check, FixedPoint, NonnegReport};
pub use representation::{
    compare_svd, dual_representation_check, dual_truncation_error, reconstruct, truncation_error, DualCheck,
    SvdComparison, TruncationReport,
};
pub use verify::{verify, PropertyCheck, VerifyConfig, VerifyReport};
