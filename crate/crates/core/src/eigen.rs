//! Operators whose restrictions attain their norm at eigenvectors:
//! `Tx = Σ λₙ ξₙ(x) xₙ` with `λₙ = γₙ‖Tₙ‖`.

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::deflation::{deflate_with, hahn_banach_extend, Decomposition, DecompositionKind, DeflationConfig, DeflationStep};
use crate::error::{Error, Result};
use crate::operators::{op_norm_power, DenseOperator};
use crate::spaces::{self, Functional, NormSpec, SubspaceBasis, Vector};

#[derive(Debug, Clone, PartialEq)]
pub struct FixedPoint {
    /// Norm-one functional on the whole space with `f(a) = 1`.
    pub f: Functional,
    /// `‖(T'f − γ‖T‖f)|_M‖_*` (an upper bound: measured on the whole space).
    pub residual: f64,
    pub iterations: usize,
}

/// `f ∈ 𝒥_a` with `T'f = γ‖T‖f`, for `Ta = γ‖T‖a` on the whole space.
pub fn fixed_point_functional(t: &DenseOperator, a: &Vector, gamma: f64, cfg: &DeflationConfig) -> Result<FixedPoint> {
    let norm = op_norm_power(t, &SubspaceBasis::full(*t.source()), &cfg.power)?.value;
    fixed_point_on(t, &SubspaceBasis::full(*t.source()), a, gamma, norm, cfg)
}

/// As [`fixed_point_functional`] for the restriction `T_M` of `T` to
/// `M = span B` (which must be invariant), with `‖T_M‖ = norm`. The
/// restricted functional is extended to the whole space with norm one.
///
/// Damped iteration `c ← (1−θ)c + θ(γ/‖T_M‖)T_M'c` in subspace coordinates,
/// started from a duality selection of `a`. The map preserves the convex set
/// `{‖c‖_* ≤ 1, c(a) = 1}`; each iterate is re-normalized onto `c(a) = 1`
/// against round-off drift.
pub fn fixed_point_on(
    t: &DenseOperator,
    basis: &SubspaceBasis,
    a: &Vector,
    gamma: f64,
    norm: f64,
    cfg: &DeflationConfig,
) -> Result<FixedPoint> {
    if !t.is_square() {
        return Err(Error::InvalidArgument("fixed points need an operator on one space".into()));
    }
    if gamma.abs() != 1.0 {
        return Err(Error::InvalidArgument("gamma must be ±1".into()));
    }
    if norm <= 0.0 {
        return Err(Error::ZeroRestriction);
    }
    let space = *t.source();
    let b = basis.columns();
    let m = b.transpose() * t.entries() * b;
    let za = b.transpose() * a.entries();
    let f0 = spaces::duality_select(a, &cfg.power.duality)?;
    let mut c = b.transpose() * f0.entries();
    let scale = gamma / norm;
    let theta = cfg.theta;
    let mut iterations = 0;
    while iterations < cfg.fixed_point_max_iter {
        iterations += 1;
        let mut next = &c * (1.0 - theta) + m.transpose() * &c * (theta * scale);
        let pair = next.dot(&za);
        if pair == 0.0 {
            return Err(Error::Solver("fixed-point iterate lost the pairing with a".into()));
        }
        next /= pair;
        let update = (&next - &c).amax();
        c = next;
        if update <= 1e-15 * c.amax().max(1.0) {
            break;
        }
    }
    let resid_coords = m.transpose() * &c - &c * (gamma * norm);
    let residual = space.dual_norm_of((b * resid_coords).as_slice());
    let limit = 1e3 * cfg.tol * norm;
    if residual > limit {
        return Err(Error::FixedPointResidual { residual, limit });
    }
    let f = hahn_banach_extend(c.as_slice(), basis, cfg.tol)?;
    Ok(FixedPoint {
        f,
        residual,
        iterations,
    })
}

/// Eigen-deflation of a square operator whose norm attainers are eigenvectors.
/// Each step checks `‖Txⱼ − λⱼxⱼ‖ ≤ eig_tol·‖T‖`; operators failing it are
/// rejected as outside the class.
pub fn eigen_deflate(t: &DenseOperator, cfg: &DeflationConfig) -> Result<Decomposition> {
    if !t.is_square() {
        return Err(Error::InvalidArgument("eigen-deflation needs an operator on one space".into()));
    }
    let mut t_norm: Option<f64> = None;
    deflate_with(t, cfg, DecompositionKind::Eigen, |xb, j| {
        let r = op_norm_power(t, xb, &cfg.power)?;
        let x = r.maximizer;
        let norm = r.value;
        let scale = *t_norm.get_or_insert(norm);
        let tx = t.entries() * x.entries();
        let gamma = if x.entries().dot(&tx) >= 0.0 { 1.0 } else { -1.0 };
        let lambda = gamma * norm;
        let residual = t.source().norm_of((&tx - x.entries() * lambda).as_slice());
        if residual > cfg.eig_tol * scale {
            return Err(Error::OutsideEigenClass { step: j, residual });
        }
        let fp = fixed_point_on(t, xb, &x, gamma, norm, cfg)?;
        let excess = (fp.f.dual_norm() - 1.0).max(0.0);
        let g = Functional::new(fp.f.entries() * gamma, *t.target())?;
        Ok(DeflationStep {
            index: j,
            certificate_gap: (r.certificate_gap / norm).max(excess),
            f: fp.f,
            g,
            norm,
            gamma: Some(gamma),
            lambda: Some(lambda),
            x,
        })
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NonnegReport {
    /// Real eigenvalues, descending.
    pub real_eigenvalues: Vec<f64>,
    pub min_real: Option<f64>,
    pub pass: bool,
}

/// Every real eigenvalue of a square real `T` is `≥ −tol`.
pub fn nonneg_eigen_check(t: &DenseOperator, tol: f64) -> Result<NonnegReport> {
    let (r, c) = t.shape();
    if r != c {
        return Err(Error::InvalidArgument("eigenvalues need a square matrix".into()));
    }
    let scale = t.entries().amax().max(f64::MIN_POSITIVE);
    let mut real: Vec<f64> = t
        .entries()
        .complex_eigenvalues()
        .iter()
        .filter(|z| z.im.abs() <= 1e-10 * scale)
        .map(|z| z.re)
        .collect();
    real.sort_by(|a, b| b.total_cmp(a));
    let min_real = real.last().copied();
    Ok(NonnegReport {
        pass: min_real.map_or(true, |v| v >= -tol),
        real_eigenvalues: real,
        min_real,
    })
}

/// `diag(alpha)` on `(ℝᵈ, ‖·‖_{(k,1)})`.
pub fn make_mixed_diagonal(alpha: &[f64], k: usize) -> Result<DenseOperator> {
    let space = NormSpec::mixed_k1(k, alpha.len())?;
    DenseOperator::new(DMatrix::from_diagonal(&DVector::from_column_slice(alpha)), space, space)
}
