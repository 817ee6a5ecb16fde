//! Dense operators between normed coordinate spaces.

mod oracle;
mod power;

use nalgebra::{DMatrix, DVector};

pub use oracle::op_norm_oracle;
pub use power::{op_norm_power, NormAttainResult, PowerConfig};
pub(crate) use power::{restricted_dual_max, restriction_upper_bound};

use crate::error::{Error, Result};
use crate::linalg;
use crate::spaces::{Functional, NormSpec, Scalar, SubspaceBasis, Vector};

/// A `d_out × d_in` matrix acting from `source` into `target`.
#[derive(Debug, Clone, PartialEq)]
pub struct DenseOperator<S: Scalar = f64> {
    entries: DMatrix<S>,
    source: NormSpec,
    target: NormSpec,
}

impl<S: Scalar> DenseOperator<S> {
    pub fn new(entries: DMatrix<S>, source: NormSpec, target: NormSpec) -> Result<Self> {
        source.check_len(entries.ncols())?;
        target.check_len(entries.nrows())?;
        if entries.iter().any(|v| !v.modulus().is_finite()) {
            return Err(Error::InvalidArgument("operator has non-finite entries".into()));
        }
        Ok(Self {
            entries,
            source,
            target,
        })
    }

    /// The operator `x ↦ diag(alpha)·x` on `space`.
    pub fn diagonal(alpha: &[S], space: NormSpec) -> Result<Self> {
        space.check_len(alpha.len())?;
        let d = DVector::from_column_slice(alpha);
        Self::new(DMatrix::from_diagonal(&d), space, space)
    }

    pub fn entries(&self) -> &DMatrix<S> {
        &self.entries
    }

    pub fn source(&self) -> &NormSpec {
        &self.source
    }

    pub fn target(&self) -> &NormSpec {
        &self.target
    }

    /// `(d_out, d_in)`.
    pub fn shape(&self) -> (usize, usize) {
        self.entries.shape()
    }

    pub fn is_square(&self) -> bool {
        self.source == self.target
    }

    pub fn is_zero(&self) -> bool {
        self.entries.iter().all(|v| v.is_zero())
    }

    /// `‖A‖₂`, the largest singular value (an `ℓ²→ℓ²` reference scale).
    pub fn spectral_norm(&self) -> f64 {
        linalg::spectral_norm(&self.entries)
    }

    /// The operator `T'` from `target*` into `source*`, as a dense operator
    /// acting on functional coordinates.
    pub fn adjoint(&self) -> Self {
        Self {
            entries: self.entries.transpose(),
            source: self.target.dual(),
            target: self.source.dual(),
        }
    }
}

/// `Tx`.
pub fn apply<S: Scalar>(t: &DenseOperator<S>, x: &Vector<S>) -> Result<Vector<S>> {
    if x.space() != t.source() {
        t.source.check_len(x.dim())?;
        return Err(Error::InvalidArgument("vector does not live in the source space".into()));
    }
    Vector::new(&t.entries * x.entries(), t.target)
}

/// `T'g`, defined by `(T'g)(x) = g(Tx)`. The pairing `Σ fᵢxᵢ` is bilinear, so
/// the coordinates are the plain transpose action.
pub fn adjoint_apply<S: Scalar>(t: &DenseOperator<S>, g: &Functional<S>) -> Result<Functional<S>> {
    if g.space() != t.target() {
        t.target.check_len(g.dim())?;
        return Err(Error::InvalidArgument("functional is not paired with the target space".into()));
    }
    Functional::new(t.entries.transpose() * g.entries(), t.source)
}

/// Orthonormal basis of `{x : f(x) = 0 for every f in fs}` inside `parent`.
pub fn annihilator_basis(fs: &[Functional], parent: NormSpec) -> Result<SubspaceBasis> {
    if fs.len() >= parent.dim() {
        return Err(Error::TooManyFunctionals {
            count: fs.len(),
            dim: parent.dim(),
        });
    }
    annihilator(fs, parent)
}

/// As [`annihilator_basis`] but also allows `|fs| = d` (zero subspace).
pub(crate) fn annihilator(fs: &[Functional], parent: NormSpec) -> Result<SubspaceBasis> {
    for f in fs {
        parent.check_len(f.dim())?;
    }
    annihilator_in(fs.iter().map(|f| f.entries().clone()).collect(), parent)
}

pub(crate) fn annihilator_in(rows: Vec<DVector<f64>>, parent: NormSpec) -> Result<SubspaceBasis> {
    let d = parent.dim();
    if rows.is_empty() {
        return Ok(SubspaceBasis::full(parent));
    }
    if rows.iter().any(|r| r.len() != d) {
        return Err(Error::DimensionMismatch {
            expected: d,
            found: rows.iter().map(|r| r.len()).find(|&l| l != d).unwrap_or(0),
        });
    }
    if rows.len() > d {
        return Err(Error::DependentFunctionals);
    }
    // Dependence is judged on unit-scaled rows.
    let scaled: Vec<DVector<f64>> = rows
        .iter()
        .map(|r| {
            let n = r.amax();
            if n > 0.0 {
                r / n
            } else {
                r.clone()
            }
        })
        .collect();
    let a = DMatrix::from_fn(rows.len(), d, |i, j| scaled[i][j]);
    let gram_min = linalg::min_singular_value(&a.transpose());
    if gram_min <= 1e-10 * (rows.len() as f64).sqrt() {
        return Err(Error::DependentFunctionals);
    }
    if rows.len() == d {
        return Ok(SubspaceBasis::zero(parent));
    }
    let (null, rank) = linalg::rref_null_space(&a, 1e-12);
    if rank != rows.len() {
        return Err(Error::DependentFunctionals);
    }
    let mut q = linalg::orthonormalize(&null).ok_or(Error::DegenerateBasis)?;
    // One refinement pass against round-off in the row reduction.
    let proj = DMatrix::from_fn(d, rows.len(), |i, j| scaled[j][i]);
    let proj = linalg::orthonormalize(&proj).ok_or(Error::DependentFunctionals)?;
    q -= &proj * (proj.transpose() * &q);
    let mut q = linalg::orthonormalize(&q).ok_or(Error::DegenerateBasis)?;
    linalg::normalize_column_signs(&mut q);
    Ok(SubspaceBasis::from_orthonormal(q, parent))
}
