//! Normed coordinate spaces, their duals, duality-map selections and the
//! minimum-norm convex kernel.

mod duality;
pub(crate) mod minnorm;
mod norm;

use nalgebra::{DMatrix, DVector};

pub use duality::{DualityConfig, TieBreak};
pub use norm::{NormKind, NormSpec, Scalar};

use crate::error::{Error, Result};
use crate::linalg;

/// An element of a normed coordinate space.
#[derive(Debug, Clone, PartialEq)]
pub struct Vector<S: Scalar = f64> {
    entries: DVector<S>,
    space: NormSpec,
}

/// A linear functional, stored by its coordinates in the pairing
/// `f(x) = Σ fᵢ xᵢ`. `space` is the (primal) space it acts on; its norm is
/// the dual norm of that space.
#[derive(Debug, Clone, PartialEq)]
pub struct Functional<S: Scalar = f64> {
    entries: DVector<S>,
    space: NormSpec,
}

impl<S: Scalar> Vector<S> {
    pub fn new(entries: DVector<S>, space: NormSpec) -> Result<Self> {
        space.check_len(entries.len())?;
        Ok(Self { entries, space })
    }

    pub fn from_slice(entries: &[S], space: NormSpec) -> Result<Self> {
        Self::new(norm::to_dvector(entries), space)
    }

    pub fn zeros(space: NormSpec) -> Self {
        Self {
            entries: DVector::zeros(space.dim()),
            space,
        }
    }

    pub fn entries(&self) -> &DVector<S> {
        &self.entries
    }

    pub fn into_entries(self) -> DVector<S> {
        self.entries
    }

    pub fn space(&self) -> &NormSpec {
        &self.space
    }

    pub fn dim(&self) -> usize {
        self.entries.len()
    }

    pub fn norm(&self) -> f64 {
        self.space.norm_of(self.entries.as_slice())
    }
}

impl<S: Scalar> Functional<S> {
    pub fn new(entries: DVector<S>, space: NormSpec) -> Result<Self> {
        space.check_len(entries.len())?;
        Ok(Self { entries, space })
    }

    pub fn from_slice(entries: &[S], space: NormSpec) -> Result<Self> {
        Self::new(norm::to_dvector(entries), space)
    }

    pub fn zeros(space: NormSpec) -> Self {
        Self {
            entries: DVector::zeros(space.dim()),
            space,
        }
    }

    pub fn entries(&self) -> &DVector<S> {
        &self.entries
    }

    pub fn into_entries(self) -> DVector<S> {
        self.entries
    }

    pub fn space(&self) -> &NormSpec {
        &self.space
    }

    pub fn dim(&self) -> usize {
        self.entries.len()
    }

    pub fn dual_norm(&self) -> f64 {
        self.space.dual_norm_of(self.entries.as_slice())
    }

    /// `f(x)`.
    pub fn apply(&self, x: &Vector<S>) -> Result<S> {
        self.space.check_len(x.dim())?;
        Ok(self.apply_raw(x.entries.as_slice()))
    }

    pub(crate) fn apply_raw(&self, x: &[S]) -> S {
        self.entries
            .iter()
            .zip(x)
            .fold(S::zero(), |acc, (a, b)| acc + *a * *b)
    }
}

/// Norm of `v` in its space.
pub fn norm<S: Scalar>(v: &Vector<S>) -> f64 {
    v.norm()
}

/// Norm of `f` in the dual of its paired space.
pub fn dual_norm<S: Scalar>(f: &Functional<S>) -> f64 {
    f.dual_norm()
}

/// One member of the duality set `{f : ‖f‖_* = 1, f(x) = ‖x‖}`.
pub fn duality_select<S: Scalar>(x: &Vector<S>, cfg: &DualityConfig) -> Result<Functional<S>> {
    let f = duality::select(&x.space, x.entries.as_slice(), cfg).ok_or(Error::ZeroVector)?;
    Ok(Functional {
        entries: f,
        space: x.space,
    })
}

/// A point of the unit ball maximizing `Re h(x)`, with the maximum `‖h‖_*`.
pub(crate) fn ball_argmax(space: &NormSpec, h: &[f64], cfg: &DualityConfig) -> Option<(DVector<f64>, f64)> {
    let dual = space.dual();
    let x = duality::select(&dual, h, cfg)?;
    Some((x, dual.norm_of(h)))
}

pub(crate) fn select_raw(space: &NormSpec, x: &[f64], cfg: &DualityConfig) -> Option<DVector<f64>> {
    duality::select(space, x, cfg)
}

/// A subspace `span(columns)` of a normed coordinate space, kept with an
/// orthonormal basis of its Euclidean orthogonal complement. Norms on the
/// subspace are induced: `N_B(z) = ‖B z‖`.
#[derive(Debug, Clone, PartialEq)]
pub struct SubspaceBasis {
    columns: DMatrix<f64>,
    complement: DMatrix<f64>,
    parent: NormSpec,
}

impl SubspaceBasis {
    /// The whole space.
    pub fn full(parent: NormSpec) -> Self {
        let d = parent.dim();
        Self {
            columns: DMatrix::identity(d, d),
            complement: DMatrix::zeros(d, 0),
            parent,
        }
    }

    /// The zero subspace.
    pub fn zero(parent: NormSpec) -> Self {
        let d = parent.dim();
        Self {
            columns: DMatrix::zeros(d, 0),
            complement: DMatrix::identity(d, d),
            parent,
        }
    }

    /// Span of arbitrary linearly independent columns.
    pub fn from_columns(columns: &DMatrix<f64>, parent: NormSpec) -> Result<Self> {
        parent.check_len(columns.nrows())?;
        if columns.ncols() == 0 {
            return Ok(Self::zero(parent));
        }
        let q = linalg::orthonormalize(columns).ok_or(Error::DegenerateBasis)?;
        Ok(Self::from_orthonormal(q, parent))
    }

    pub(crate) fn from_orthonormal(columns: DMatrix<f64>, parent: NormSpec) -> Self {
        let complement = if columns.ncols() == parent.dim() {
            DMatrix::zeros(parent.dim(), 0)
        } else {
            linalg::orthonormal_complement(&columns)
        };
        Self {
            columns,
            complement,
            parent,
        }
    }

    pub fn columns(&self) -> &DMatrix<f64> {
        &self.columns
    }

    pub fn complement(&self) -> &DMatrix<f64> {
        &self.complement
    }

    pub fn parent(&self) -> &NormSpec {
        &self.parent
    }

    pub fn dim(&self) -> usize {
        self.columns.ncols()
    }

    pub fn is_full(&self) -> bool {
        self.complement.ncols() == 0
    }

    pub fn column(&self, j: usize) -> Vector {
        Vector {
            entries: self.columns.column(j).into_owned(),
            space: self.parent,
        }
    }

    /// Euclidean distance of `x` from the subspace, relative to `‖x‖₂`.
    pub fn membership_residual(&self, x: &DVector<f64>) -> f64 {
        let nx = x.norm();
        if nx == 0.0 || self.is_full() {
            return 0.0;
        }
        (self.complement.transpose() * x).norm() / nx
    }
}

/// `argmin { N(z) : A z = b }`.
///
/// `ℓ¹` optima are moved to a vertex of the optimal face, zeroing
/// higher-index coordinates first.
pub fn min_norm_affine(space: &NormSpec, a: &DMatrix<f64>, b: &DVector<f64>, tol: f64) -> Result<Vector> {
    space.check_len(a.ncols())?;
    if a.nrows() != b.len() {
        return Err(Error::DimensionMismatch {
            expected: a.nrows(),
            found: b.len(),
        });
    }
    let d = space.dim();
    let z0 = linalg::min_norm_solve(a, b);
    let residual = (a * &z0 - b).amax();
    if residual > 1e-10 * (b.amax() + a.amax() * z0.amax()).max(1e-300) {
        return Err(Error::Infeasible { residual });
    }
    // Orthonormal basis of ker A via the row space.
    let rowspace = if a.nrows() == 0 {
        DMatrix::zeros(d, 0)
    } else {
        let svd = a.clone().svd(false, true);
        let smax = svd.singular_values.max();
        let vt = svd.v_t.expect("v_t requested");
        let keep: Vec<usize> = (0..svd.singular_values.len())
            .filter(|&i| svd.singular_values[i] > 1e-12 * smax)
            .collect();
        let rows = DMatrix::from_fn(d, keep.len(), |r, c| vt[(keep[c], r)]);
        linalg::orthonormalize(&rows).unwrap_or(rows)
    };
    let kernel = linalg::orthonormal_complement(&rowspace);
    let sol = minnorm::minimize_over_image(space, &kernel, &z0)?;
    if sol.gap() > tol * sol.value.max(f64::MIN_POSITIVE) {
        return Err(Error::NoConvergence {
            iterations: 0,
            residual: sol.gap(),
        });
    }
    let z = if space.lp_exponent() == Some(1.0) {
        minnorm::purify_l1(a, b, &sol.z)
    } else {
        sol.z
    };
    Vector::new(z, *space)
}

/// `(δ, z*)` with `z* ∈ span(B)` and `δ = ‖v − z*‖ = dist(v, span B)`.
pub fn dist_to_subspace(v: &Vector, basis: &SubspaceBasis, tol: f64) -> Result<(f64, Vector)> {
    basis.parent.check_len(v.dim())?;
    let sol = minnorm::minimize_over_image(&v.space, &basis.columns, &v.entries)?;
    if sol.gap() > tol.max(1e-15) * sol.value.max(v.norm()).max(f64::MIN_POSITIVE) {
        return Err(Error::NoConvergence {
            iterations: 0,
            residual: sol.gap(),
        });
    }
    let nearest = &v.entries - &sol.z;
    Ok((sol.value, Vector::new(nearest, v.space)?))
}
