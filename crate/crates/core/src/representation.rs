//! The representation `Tx = Σ ξₙ(x)·Txₙ`: reconstruction, truncation error
//! against the projection bound, the dual representation and the comparison
//! with the classical SVD.

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::deflation::{quotient_projection_norm, Decomposition};
use crate::error::{Error, Result};
use crate::linalg;
use crate::operators::{op_norm_power, DenseOperator, PowerConfig};
use crate::spaces::{Functional, SubspaceBasis, Vector};

fn check(dec: &Decomposition, t: &DenseOperator, m: usize) -> Result<()> {
    if dec.source != *t.source() || dec.target != *t.target() {
        return Err(Error::InvalidArgument("decomposition does not belong to this operator".into()));
    }
    if m > dec.rank() {
        return Err(Error::IndexOutOfRange {
            index: m,
            len: dec.rank(),
        });
    }
    Ok(())
}

/// `Σ_{n≤m} ξₙ(x)·Txₙ`.
pub fn reconstruct(dec: &Decomposition, t: &DenseOperator, m: usize, x: &Vector) -> Result<Vector> {
    check(dec, t, m)?;
    if x.space() != t.source() {
        return Err(Error::InvalidArgument("vector does not live in the source space".into()));
    }
    let mut acc = DVector::zeros(t.shape().0);
    for (xi, step) in dec.xi.iter().zip(&dec.steps).take(m) {
        acc.axpy(xi.apply(x)?, &(t.entries() * step.x.entries()), 1.0);
    }
    Vector::new(acc, *t.target())
}

/// `‖A‖` for `A` between the spaces of `t`: the spectral norm when both are
/// Euclidean, multistart power iteration otherwise.
pub(crate) fn operator_norm(a: DMatrix<f64>, like: &DenseOperator, cfg: &PowerConfig) -> Result<f64> {
    let op = DenseOperator::new(a, *like.source(), *like.target())?;
    if op.source().is_hilbert() && op.target().is_hilbert() {
        return Ok(op.spectral_norm());
    }
    match op_norm_power(&op, &SubspaceBasis::full(*op.source()), cfg) {
        Ok(r) => Ok(r.value),
        Err(Error::ZeroRestriction) => Ok(0.0),
        Err(e) => Err(e),
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TruncationReport {
    pub m: usize,
    /// `‖T·S_{m+1} − T‖`.
    pub error: f64,
    /// `‖T_{m+1}‖·(‖Ŝ_{m+1}‖ + 1)`, with `‖T_{r+1}‖ = 0`.
    pub bound: f64,
    pub s_norm: f64,
    pub holds: bool,
}

/// `‖T·S_{m+1} − T‖` and the projection bound `‖T_{m+1}‖(‖Ŝ_{m+1}‖ + 1)`.
pub fn truncation_error(dec: &Decomposition, t: &DenseOperator, m: usize, cfg: &PowerConfig) -> Result<TruncationReport> {
    check(dec, t, m)?;
    let s = dec.s_matrix(m)?;
    let diff = t.entries() * s - t.entries();
    let error = operator_norm(diff, t, cfg)?;
    let s_norm = match dec.diagnostics.s_norm_estimates.get(m.wrapping_sub(1)) {
        Some(&v) if m > 0 => v,
        _ => quotient_projection_norm(dec, m, cfg)?,
    };
    let next = dec.steps.get(m).map_or(0.0, |s| s.norm);
    let bound = next * (s_norm + 1.0);
    let scale = dec.steps.first().map_or(1.0, |s| s.norm).max(1.0);
    Ok(TruncationReport {
        m,
        error,
        bound,
        s_norm,
        holds: error <= bound + 1e-7 * scale,
    })
}

/// `‖R_{m+1}T' − T'‖` as an operator from `Y*` to `X*`.
pub fn dual_truncation_error(dec: &Decomposition, t: &DenseOperator, m: usize, cfg: &PowerConfig) -> Result<f64> {
    check(dec, t, m)?;
    let s = dec.s_matrix(m)?;
    let diff = s.transpose() * t.entries().transpose() - t.entries().transpose();
    operator_norm(diff, &t.adjoint(), cfg)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DualCheck {
    /// `‖T'g − Σₙ (T'g)(xₙ)·ξₙ‖_*`.
    pub deviation: f64,
    /// For `m = 0..=r`: `(‖R_{m+1}T' − T'‖, ‖TS_{m+1} − T‖)`.
    pub truncations: Vec<(f64, f64)>,
    pub bound_holds: bool,
}

/// Checks `T'g = Σₙ (T'g)(xₙ)ξₙ` and `‖R_{m+1}T' − T'‖ ≤ ‖TS_{m+1} − T‖`.
pub fn dual_representation_check(dec: &Decomposition, t: &DenseOperator, g: &Functional, cfg: &PowerConfig) -> Result<DualCheck> {
    check(dec, t, 0)?;
    if g.space() != t.target() {
        return Err(Error::InvalidArgument("functional is not paired with the target space".into()));
    }
    let tg = t.entries().transpose() * g.entries();
    let mut rep = DVector::zeros(tg.len());
    for (xi, step) in dec.xi.iter().zip(&dec.steps) {
        rep.axpy(tg.dot(step.x.entries()), xi.entries(), 1.0);
    }
    let deviation = t.source().dual_norm_of((tg - rep).as_slice());
    let scale = dec.steps.first().map_or(1.0, |s| s.norm).max(1.0);
    let mut truncations = Vec::with_capacity(dec.rank() + 1);
    let mut bound_holds = true;
    for m in 0..=dec.rank() {
        let dual = dual_truncation_error(dec, t, m, cfg)?;
        let primal = truncation_error(dec, t, m, cfg)?.error;
        bound_holds &= dual <= primal + 1e-7 * scale;
        truncations.push((dual, primal));
    }
    Ok(DualCheck {
        deviation,
        truncations,
        bound_holds,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SvdComparison {
    pub singular_values: Vec<f64>,
    pub norms: Vec<f64>,
    pub max_rel_value_err: f64,
    /// Largest sine of a principal angle between the spans of the `xⱼ` and of
    /// the right singular vectors, taken over clusters of equal values.
    pub max_subspace_sine: f64,
    pub mismatches: Vec<String>,
}

/// Compare a Euclidean decomposition with the SVD of `T`.
pub fn compare_svd(dec: &Decomposition, t: &DenseOperator, tol: f64) -> Result<SvdComparison> {
    check(dec, t, 0)?;
    if !(t.source().is_hilbert() && t.target().is_hilbert()) {
        return Err(Error::Unsupported("SVD comparison needs Euclidean norms on both sides".into()));
    }
    let svd = t.entries().clone().svd(false, true);
    let vt = svd.v_t.ok_or_else(|| Error::Solver("SVD failed".into()))?;
    let mut order: Vec<usize> = (0..svd.singular_values.len()).collect();
    order.sort_by(|&a, &b| svd.singular_values[b].total_cmp(&svd.singular_values[a]));
    let sigma: Vec<f64> = order.iter().map(|&i| svd.singular_values[i]).collect();
    let s1 = sigma.first().copied().unwrap_or(0.0);
    let norms = dec.norms();
    let r = norms.len();
    let mut mismatches = Vec::new();
    let mut max_rel = 0.0_f64;
    for (j, n) in norms.iter().enumerate() {
        let s = sigma.get(j).copied().unwrap_or(0.0);
        let rel = (n - s).abs() / s1;
        max_rel = max_rel.max(rel);
        if rel > tol {
            mismatches.push(format!("step {}: norm {n} vs singular value {s}", j + 1));
        }
    }
    for (j, s) in sigma.iter().enumerate().skip(r) {
        if *s > tol * s1 {
            mismatches.push(format!("singular value {} = {s} not recovered", j + 1));
        }
    }
    // Clusters of (numerically) equal values.
    let mut max_sine = 0.0_f64;
    let mut start = 0;
    while start < r {
        let mut end = start + 1;
        while end < r && (sigma[end] - sigma[start]).abs() <= 1e-8 * s1 {
            end += 1;
        }
        let mut full_end = end;
        while full_end < sigma.len() && (sigma[full_end] - sigma[start]).abs() <= 1e-8 * s1 {
            full_end += 1;
        }
        let xs = DMatrix::from_fn(t.shape().1, end - start, |i, c| dec.steps[start + c].x.entries()[i]);
        let v = DMatrix::from_fn(t.shape().1, full_end - start, |i, c| vt[(order[start + c], i)]);
        if let Some(q) = linalg::orthonormalize(&xs) {
            let resid = &q - &v * (v.transpose() * &q);
            let sine = linalg::spectral_norm(&resid);
            max_sine = max_sine.max(sine);
            if sine > tol.sqrt() {
                mismatches.push(format!("steps {}..{}: subspace angle sine {sine:.3e}", start + 1, end));
            }
        }
        start = end;
    }
    Ok(SvdComparison {
        singular_values: sigma,
        norms,
        max_rel_value_err: max_rel,
        max_subspace_sine: max_sine,
        mismatches,
    })
}
