//! The deflation construction: unit vectors `xⱼ`, functionals `fⱼ`, `gⱼ` and
//! norms `‖Tⱼ‖` of successive restrictions, the biorthogonal `ξ` system and
//! the projections `S` and `R`.

use nalgebra::{DMatrix, DVector};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::operators::{self, op_norm_power, DenseOperator, PowerConfig};
use crate::spaces::{self, minnorm, Functional, NormSpec, SubspaceBasis, Vector};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct DeflationConfig {
    pub power: PowerConfig,
    /// Accuracy target for certificates and extensions.
    pub tol: f64,
    /// Stop once `‖Tⱼ‖ < rank_tol·‖T₁‖`.
    pub rank_tol: f64,
    /// Optional cap on the number of steps.
    pub max_steps: Option<usize>,
    /// Eigen variant: `‖Txⱼ − λⱼxⱼ‖ ≤ eig_tol·‖T‖` is required of each step.
    pub eig_tol: f64,
    /// Eigen variant: damping of the fixed-point iteration.
    pub theta: f64,
    /// Eigen variant: fixed-point iteration budget.
    pub fixed_point_max_iter: usize,
}

impl Default for DeflationConfig {
    fn default() -> Self {
        Self {
            power: PowerConfig::default(),
            tol: 1e-9,
            rank_tol: 1e-10,
            max_steps: None,
            eig_tol: 1e-7,
            theta: 0.5,
            fixed_point_max_iter: 5000,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct DeflationStep {
    /// 1-based step index.
    pub index: usize,
    pub x: Vector,
    pub f: Functional,
    pub g: Functional,
    pub norm: f64,
    pub certificate_gap: f64,
    /// Eigen variant: `Txⱼ = γⱼ‖Tⱼ‖xⱼ`.
    pub gamma: Option<f64>,
    /// Eigen variant: `λⱼ = γⱼ‖Tⱼ‖`.
    pub lambda: Option<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DecompositionKind {
    Generic,
    Eigen,
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(default)]
pub struct Diagnostics {
    /// `max |ξᵢ(xⱼ) − δᵢⱼ|`.
    pub biortho_max_err: f64,
    pub norm_sequence: Vec<f64>,
    /// `‖Ŝ_{n+1}‖` for `n = 1..=r` (projection on the quotient by the kernel).
    pub s_norm_estimates: Vec<f64>,
    /// For `m = 0..=r`: `max ‖Tx − Σ_{n≤m} ξₙ(x)Txₙ‖ / (‖T‖‖x‖)` over a fixed
    /// sample of `x`.
    pub reconstruction_errors: Vec<f64>,
    /// `max_{i<j} |fᵢ(xⱼ)|`.
    pub nesting_x_max_err: f64,
    /// `max_{i<j} |gᵢ(Txⱼ)|`.
    pub nesting_y_max_err: f64,
    pub warnings: Vec<String>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Decomposition {
    pub kind: DecompositionKind,
    pub source: NormSpec,
    pub target: NormSpec,
    pub steps: Vec<DeflationStep>,
    pub xi: Vec<Functional>,
    /// Basis of `X_{r+1}`, the annihilator of all `fⱼ`.
    pub kernel_basis: SubspaceBasis,
    pub config: DeflationConfig,
    pub diagnostics: Diagnostics,
}

impl Decomposition {
    pub fn rank(&self) -> usize {
        self.steps.len()
    }

    pub fn norms(&self) -> Vec<f64> {
        self.steps.iter().map(|s| s.norm).collect()
    }

    pub fn xs(&self) -> Vec<Vector> {
        self.steps.iter().map(|s| s.x.clone()).collect()
    }

    pub fn fs(&self) -> Vec<Functional> {
        self.steps.iter().map(|s| s.f.clone()).collect()
    }

    /// `[x₁ … x_r]`.
    pub fn x_matrix(&self) -> DMatrix<f64> {
        columns(self.source.dim(), self.steps.iter().map(|s| s.x.entries()))
    }

    /// `[ξ₁ … ξ_r]`.
    pub fn xi_matrix(&self) -> DMatrix<f64> {
        columns(self.source.dim(), self.xi.iter().map(|f| f.entries()))
    }

    /// Matrix of `S_{n+1} = Σ_{j≤n} ξⱼ(·)xⱼ`.
    pub fn s_matrix(&self, n: usize) -> Result<DMatrix<f64>> {
        check_index(n, self.rank())?;
        let x = self.x_matrix();
        let xi = self.xi_matrix();
        Ok(x.columns(0, n) * xi.columns(0, n).transpose())
    }
}

fn columns<'a>(d: usize, it: impl Iterator<Item = &'a DVector<f64>>) -> DMatrix<f64> {
    let cols: Vec<&DVector<f64>> = it.collect();
    DMatrix::from_fn(d, cols.len(), |i, j| cols[j][i])
}

fn check_index(n: usize, len: usize) -> Result<()> {
    if n > len {
        return Err(Error::IndexOutOfRange { index: n, len });
    }
    Ok(())
}

/// Minimum-dual-norm extension of a functional given on `span B` by its values
/// `phi[i] = φ(bᵢ)` on the (orthonormal) basis columns.
pub fn hahn_banach_extend(phi: &[f64], basis: &SubspaceBasis, tol: f64) -> Result<Functional> {
    if phi.len() != basis.dim() {
        return Err(Error::DimensionMismatch {
            expected: basis.dim(),
            found: phi.len(),
        });
    }
    let space = *basis.parent();
    let b = basis.columns();
    let base = b * DVector::from_column_slice(phi);
    let restricted = restricted_dual_norm(&space, basis, &base)?;
    let f = if basis.is_full() {
        base
    } else {
        let sol = minnorm::minimize_over_image(&space.dual(), basis.complement(), &base)?;
        sol.z
    };
    let achieved = space.dual_norm_of(f.as_slice());
    let limit = restricted * (1.0 + 10.0 * tol);
    if achieved > limit {
        return Err(Error::ExtensionNorm { achieved, limit });
    }
    Functional::new(f, space)
}

/// `‖h|_{span B}‖_*`.
pub(crate) fn restricted_dual_norm(space: &NormSpec, basis: &SubspaceBasis, h: &DVector<f64>) -> Result<f64> {
    Ok(operators::restricted_dual_max(space, basis, h, &Default::default())?
        .map_or(0.0, |(_, v, _)| v))
}

/// One step on `X_j = span(xb)`: the norm attainer `xⱼ`, a duality functional
/// `gⱼ` of `Txⱼ`, and a norm-one extension `fⱼ` of `(gⱼ∘T)/‖Tⱼ‖` from `X_j`.
pub fn deflate_step(t: &DenseOperator, xb: &SubspaceBasis, index: usize, cfg: &DeflationConfig) -> Result<DeflationStep> {
    let r = op_norm_power(t, xb, &cfg.power)?;
    let x = r.maximizer;
    let norm = r.value;
    let tx = t.entries() * x.entries();
    let g = spaces::select_raw(t.target(), tx.as_slice(), &cfg.power.duality).ok_or(Error::ZeroRestriction)?;
    let h = t.entries().transpose() * &g / norm;
    let f = if t.source().dual_norm_of(h.as_slice()) <= 1.0 + 1e-12 {
        Functional::new(h, *t.source())?
    } else {
        let phi = xb.columns().transpose() * &h;
        hahn_banach_extend(phi.as_slice(), xb, cfg.tol)?
    };
    let excess = (f.dual_norm() - 1.0).max(0.0);
    Ok(DeflationStep {
        index,
        f,
        g: Functional::new(g, *t.target())?,
        norm,
        certificate_gap: (r.certificate_gap / norm).max(excess),
        gamma: None,
        lambda: None,
        x,
    })
}

/// Full deflation of `T ≠ 0` until the rank is exhausted.
pub fn run_deflation(t: &DenseOperator, cfg: &DeflationConfig) -> Result<Decomposition> {
    deflate_with(t, cfg, DecompositionKind::Generic, |xb, j| deflate_step(t, xb, j, cfg))
}

pub(crate) fn deflate_with<F>(
    t: &DenseOperator,
    cfg: &DeflationConfig,
    kind: DecompositionKind,
    mut step: F,
) -> Result<Decomposition>
where
    F: FnMut(&SubspaceBasis, usize) -> Result<DeflationStep>,
{
    if t.is_zero() {
        return Err(Error::InvalidArgument("the zero operator has no deflation".into()));
    }
    let (src, tgt) = (*t.source(), *t.target());
    let (d_out, d_in) = t.shape();
    let max_steps = cfg.max_steps.unwrap_or(usize::MAX).min(d_in.min(d_out));
    let mut xb = SubspaceBasis::full(src);
    let mut steps: Vec<DeflationStep> = Vec::new();
    let mut warnings = Vec::new();
    while steps.len() < max_steps {
        let j = steps.len() + 1;
        let first = steps.first().map(|s| s.norm);
        let bound = operators::restriction_upper_bound(t, &xb);
        if bound == 0.0 || first.is_some_and(|n1| bound < cfg.rank_tol * n1) {
            break;
        }
        let s = match step(&xb, j) {
            Ok(s) => s,
            Err(Error::ZeroRestriction) => break,
            Err(e) => return Err(e),
        };
        if let Some(n1) = first {
            if s.norm < cfg.rank_tol * n1 {
                break;
            }
            let prev = steps[steps.len() - 1].norm;
            if s.norm > prev + 1e-9 * n1 {
                return Err(Error::NonMonotoneNorms {
                    step: j,
                    previous: prev,
                    current: s.norm,
                });
            }
        }
        if s.certificate_gap > 1e3 * cfg.tol {
            return Err(Error::CertificateGap {
                step: j,
                gap: s.certificate_gap,
                limit: 1e3 * cfg.tol,
            });
        }
        if s.certificate_gap > 10.0 * cfg.tol {
            warnings.push(format!("step {j}: certificate gap {:.3e}", s.certificate_gap));
        }
        steps.push(s);
        let fs: Vec<Functional> = steps.iter().map(|s| s.f.clone()).collect();
        xb = operators::annihilator(&fs, src)?;
    }
    let fs: Vec<Functional> = steps.iter().map(|s| s.f.clone()).collect();
    let xs: Vec<Vector> = steps.iter().map(|s| s.x.clone()).collect();
    let xi = xi_recursion(&fs, &xs, cfg.tol)?;
    let mut dec = Decomposition {
        kind,
        source: src,
        target: tgt,
        steps,
        xi,
        kernel_basis: xb,
        config: *cfg,
        diagnostics: Diagnostics::default(),
    };
    dec.diagnostics = diagnose(t, &dec)?;
    // Truncations need not improve monotonically; flag increases as info.
    for (m, w) in dec.diagnostics.reconstruction_errors.windows(2).enumerate() {
        if w[1] > w[0] + 1e-9 {
            warnings.push(format!("info: sampled truncation error rises from m={m} to m={}", m + 1));
        }
    }
    dec.diagnostics.warnings.splice(0..0, warnings);
    Ok(dec)
}

/// `ξ₁ = f₁`, `ξ_{n+1} = f_{n+1} − Σ_{j≤n} f_{n+1}(xⱼ)ξⱼ`.
pub fn xi_recursion(fs: &[Functional], xs: &[Vector], tol: f64) -> Result<Vec<Functional>> {
    if fs.len() != xs.len() {
        return Err(Error::DimensionMismatch {
            expected: fs.len(),
            found: xs.len(),
        });
    }
    let mut xi: Vec<Functional> = Vec::with_capacity(fs.len());
    for f in fs {
        let mut v = f.entries().clone();
        for (xj, xij) in xs.iter().zip(&xi) {
            let c = f.apply(xj)?;
            v.axpy(-c, xij.entries(), 1.0);
        }
        xi.push(Functional::new(v, *f.space())?);
    }
    let err = biortho_error(&xi, xs)?;
    if err > 100.0 * tol {
        return Err(Error::Biorthogonality { max_err: err });
    }
    Ok(xi)
}

/// `max |ξᵢ(xⱼ) − δᵢⱼ|`.
pub fn biortho_error(xi: &[Functional], xs: &[Vector]) -> Result<f64> {
    let mut err = 0.0_f64;
    for (i, f) in xi.iter().enumerate() {
        for (j, x) in xs.iter().enumerate() {
            let delta = if i == j { 1.0 } else { 0.0 };
            err = err.max((f.apply(x)? - delta).abs());
        }
    }
    Ok(err)
}

/// `S_{n+1}x = Σ_{j≤n} ξⱼ(x)xⱼ`; `S₁ = 0`.
pub fn projection_s(xi: &[Functional], xs: &[Vector], n: usize, x: &Vector) -> Result<Vector> {
    check_index(n, xi.len().min(xs.len()))?;
    let mut out = Vector::zeros(*x.space());
    let mut acc = DVector::zeros(x.dim());
    for (f, xj) in xi.iter().zip(xs).take(n) {
        acc.axpy(f.apply(x)?, xj.entries(), 1.0);
    }
    if n > 0 {
        out = Vector::new(acc, *x.space())?;
    }
    Ok(out)
}

/// `R_{n+1}f = Σ_{i≤n} f(xᵢ)ξᵢ`; `R₁ = 0`.
pub fn dual_projection_r(xi: &[Functional], xs: &[Vector], n: usize, f: &Functional) -> Result<Functional> {
    check_index(n, xi.len().min(xs.len()))?;
    let mut acc = DVector::zeros(f.dim());
    for (xii, xj) in xi.iter().zip(xs).take(n) {
        acc.axpy(f.apply(xj)?, xii.entries(), 1.0);
    }
    Functional::new(acc, *f.space())
}

/// `‖Ŝ_{n+1}‖`, the norm of `S_{n+1}` on `X / ker T`, computed as the norm of
/// its adjoint `R_{n+1}` on `(ker T)^⊥ = span{f₁,…,f_r}` in `X*`.
pub fn quotient_projection_norm(dec: &Decomposition, n: usize, cfg: &PowerConfig) -> Result<f64> {
    check_index(n, dec.rank())?;
    if n == 0 {
        return Ok(0.0);
    }
    let dual = dec.source.dual();
    let s = dec.s_matrix(n)?;
    let r = DenseOperator::new(s.transpose(), dual, dual)?;
    let span = SubspaceBasis::from_columns(&columns(dec.source.dim(), dec.steps.iter().map(|s| s.f.entries())), dual)?;
    match op_norm_power(&r, &span, cfg) {
        Ok(res) => Ok(res.value),
        Err(Error::ZeroRestriction) => Ok(0.0),
        Err(e) => Err(e),
    }
}

/// Deterministic sample of `x` used by the reconstruction diagnostic.
pub(crate) fn sample_vectors(space: &NormSpec, count: usize, seed: u64) -> Vec<DVector<f64>> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..count)
        .map(|_| DVector::from_fn(space.dim(), |_, _| StandardNormal.sample(&mut rng)))
        .collect()
}

pub(crate) fn diagnose(t: &DenseOperator, dec: &Decomposition) -> Result<Diagnostics> {
    let xs = dec.xs();
    let r = dec.rank();
    let mut nest_x = 0.0_f64;
    let mut nest_y = 0.0_f64;
    for j in 0..r {
        let tx = t.entries() * xs[j].entries();
        for i in 0..j {
            nest_x = nest_x.max(dec.steps[i].f.apply(&xs[j])?.abs());
            nest_y = nest_y.max(dec.steps[i].g.apply_raw(tx.as_slice()).abs());
        }
    }
    let t_norm = dec.steps.first().map_or(0.0, |s| s.norm);
    let x = dec.x_matrix();
    let tx = t.entries() * &x;
    let xi = dec.xi_matrix();
    let samples = sample_vectors(&dec.source, 16, dec.config.power.seed ^ 0x5eed);
    let reconstruction_errors = (0..=r)
        .map(|m| {
            samples
                .iter()
                .map(|v| {
                    let coeff = xi.columns(0, m).transpose() * v;
                    let diff = t.entries() * v - tx.columns(0, m) * coeff;
                    dec.target.norm_of(diff.as_slice()) / (t_norm * dec.source.norm_of(v.as_slice()))
                })
                .fold(0.0, f64::max)
        })
        .collect();
    let s_norm_estimates = (1..=r)
        .map(|n| quotient_projection_norm(dec, n, &dec.config.power))
        .collect::<Result<Vec<f64>>>()?;
    Ok(Diagnostics {
        biortho_max_err: biortho_error(&dec.xi, &xs)?,
        norm_sequence: dec.norms(),
        s_norm_estimates,
        reconstruction_errors,
        nesting_x_max_err: nest_x,
        nesting_y_max_err: nest_y,
        warnings: Vec::new(),
    })
}
