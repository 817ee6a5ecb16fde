//! The invariant suite run against a decomposition of a given operator.

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::deflation::{biortho_error, quotient_projection_norm, restricted_dual_norm, sample_vectors, Decomposition};
use crate::error::{Error, Result};
use crate::linalg;
use crate::operators::{self, DenseOperator, PowerConfig};
use crate::representation::operator_norm;
use crate::spaces::{dist_to_subspace, Functional, SubspaceBasis, Vector};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct VerifyConfig {
    /// Random vectors per sampled property.
    pub samples: usize,
    pub seed: u64,
    pub power: PowerConfig,
}

impl Default for VerifyConfig {
    fn default() -> Self {
        Self {
            samples: 8,
            seed: 0,
            power: PowerConfig::default(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PropertyCheck {
    pub name: String,
    pub pass: bool,
    /// Worst observed value of the checked quantity.
    pub measured: f64,
    pub tolerance: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub detail: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VerifyReport {
    pub all_pass: bool,
    pub properties: Vec<PropertyCheck>,
}

impl VerifyReport {
    pub fn failures(&self) -> impl Iterator<Item = &PropertyCheck> {
        self.properties.iter().filter(|p| !p.pass)
    }
}

fn prop(name: &str, measured: f64, tolerance: f64, detail: Option<String>) -> PropertyCheck {
    PropertyCheck {
        name: name.into(),
        pass: measured <= tolerance,
        measured,
        tolerance,
        detail,
    }
}

fn check_shapes(t: &DenseOperator, dec: &Decomposition) -> Result<()> {
    let (d_out, d_in) = t.shape();
    let dims = [
        (dec.source.dim(), d_in),
        (dec.target.dim(), d_out),
        (dec.kernel_basis.parent().dim(), d_in),
    ];
    for (found, expected) in dims {
        if found != expected {
            return Err(Error::DimensionMismatch { expected, found });
        }
    }
    if dec.source != *t.source() || dec.target != *t.target() {
        return Err(Error::InvalidArgument("decomposition norms differ from the operator's".into()));
    }
    if dec.xi.len() != dec.rank() {
        return Err(Error::DimensionMismatch {
            expected: dec.rank(),
            found: dec.xi.len(),
        });
    }
    for s in &dec.steps {
        for (found, expected) in [(s.x.dim(), d_in), (s.f.dim(), d_in), (s.g.dim(), d_out)] {
            if found != expected {
                return Err(Error::DimensionMismatch { expected, found });
            }
        }
    }
    for xi in &dec.xi {
        if xi.dim() != d_in {
            return Err(Error::DimensionMismatch {
                expected: d_in,
                found: xi.dim(),
            });
        }
    }
    Ok(())
}

/// Runs every invariant check; `Err` only for malformed input or numerical
/// failure inside a check.
pub fn verify(t: &DenseOperator, dec: &Decomposition, cfg: &VerifyConfig) -> Result<VerifyReport> {
    check_shapes(t, dec)?;
    let (src, tgt) = (*t.source(), *t.target());
    let a = t.entries();
    let r = dec.rank();
    let d_in = src.dim();
    let xs = dec.xs();
    let fs = dec.fs();
    let n1 = dec.steps.first().map_or(0.0, |s| s.norm);
    let scale = n1.max(1.0);
    let mut out = Vec::new();

    // Per-step duality relations.
    let mut worst = 0.0_f64;
    for s in &dec.steps {
        let tx = a * s.x.entries();
        worst = worst
            .max((s.x.norm() - 1.0).abs())
            .max((s.f.apply(&s.x)? - 1.0).abs())
            .max((s.f.dual_norm() - 1.0).abs())
            .max((s.g.apply_raw(tx.as_slice()) - s.norm).abs() / scale)
            .max((s.g.dual_norm() - 1.0).abs())
            .max((tgt.norm_of(tx.as_slice()) - s.norm).abs() / scale);
    }
    out.push(prop("step_invariants", worst, 1e-7, None));

    out.push(prop("biorthogonality", biortho_error(&dec.xi, &xs)?, 1e-7, None));

    let mut rise = 0.0_f64;
    for w in dec.steps.windows(2) {
        rise = rise.max(w[1].norm - w[0].norm);
    }
    out.push(prop("monotone_norms", rise / scale, 1e-9, None));

    let mut nest = 0.0_f64;
    for j in 0..r {
        let tx = a * xs[j].entries();
        for i in 0..j {
            nest = nest
                .max(fs[i].apply(&xs[j])?.abs())
                .max(dec.steps[i].g.apply_raw(tx.as_slice()).abs());
        }
    }
    out.push(prop("nesting", nest, 1e-7, None));

    // Kernel: the final annihilator is ker T, in both directions.
    let k = &dec.kernel_basis;
    let mut kern = (k.dim() as f64 - (d_in - r) as f64).abs();
    for j in 0..k.dim() {
        let v = k.columns().column(j).into_owned();
        let vn = src.norm_of(v.as_slice());
        kern = kern.max(tgt.norm_of((a * &v).as_slice()) / (scale * vn));
        for f in &fs {
            kern = kern.max(f.apply_raw(v.as_slice()).abs() / vn);
        }
    }
    let null = numerical_null_space(a);
    let null_detail = format!("kernel dim {}, null space dim {}", k.dim(), null.ncols());
    kern = kern.max((null.ncols() as f64 - k.dim() as f64).abs());
    for v in null.column_iter() {
        let vn = src.norm_of(v.as_slice());
        for f in &fs {
            kern = kern.max(f.apply_raw(v.as_slice()).abs() / vn);
        }
    }
    out.push(prop("kernel", kern, 1e-7, Some(null_detail)));

    // Linear independence of the xⱼ and of the Txⱼ.
    let x = dec.x_matrix();
    let indep = if r == 0 {
        f64::INFINITY
    } else {
        let tx = a * &x;
        min_normalized_sv(&x).min(min_normalized_sv(&tx))
    };
    out.push(PropertyCheck {
        name: "linear_independence".into(),
        pass: indep > 1e-8,
        measured: indep,
        tolerance: 1e-8,
        detail: Some("smallest singular value after column normalization (must exceed tolerance)".into()),
    });

    let samples: Vec<DVector<f64>> = sample_vectors(&src, cfg.samples, cfg.seed)
        .into_iter()
        .map(|v| {
            let n = src.norm_of(v.as_slice());
            v / n
        })
        .collect();

    // Metric projection: |ξₙ(x)| = dist(x − Sₙx, X_{n+1}).
    let mut metric = 0.0_f64;
    let mut annihilators: Vec<SubspaceBasis> = Vec::with_capacity(r);
    for n in 1..=r {
        annihilators.push(operators::annihilator(&fs[..n], src)?);
    }
    for v in &samples {
        let xv = Vector::new(v.clone(), src)?;
        for n in 1..=r {
            let y = v - dec.s_matrix(n - 1)? * v;
            let (delta, _) = dist_to_subspace(&Vector::new(y, src)?, &annihilators[n - 1], 1e-10)?;
            metric = metric.max((dec.xi[n - 1].apply(&xv)?.abs() - delta).abs());
        }
    }
    out.push(prop("metric_projection", metric, 1e-5, None));

    // Reconstruction at full rank.
    let xi = dec.xi_matrix();
    let tx = a * &x;
    let mut recon = 0.0_f64;
    for v in &samples {
        let diff = a * v - &tx * (xi.transpose() * v);
        recon = recon.max(tgt.norm_of(diff.as_slice()) / scale);
    }
    out.push(prop("reconstruction", recon, 1e-7, None));

    // Truncation bound ‖TS_{m+1} − T‖ ≤ ‖T_{m+1}‖(‖Ŝ_{m+1}‖ + 1).
    let mut excess = f64::NEG_INFINITY;
    let mut primal = Vec::with_capacity(r + 1);
    let mut s_sup = 0.0_f64;
    for m in 0..=r {
        let s = dec.s_matrix(m)?;
        let err = operator_norm(a * &s - a, t, &cfg.power)?;
        let s_norm = quotient_projection_norm(dec, m, &cfg.power)?;
        s_sup = s_sup.max(s_norm);
        let next = dec.steps.get(m).map_or(0.0, |s| s.norm);
        excess = excess.max((err - next * (s_norm + 1.0)) / scale);
        primal.push(err);
    }
    out.push(prop(
        "truncation_bound",
        excess.max(0.0),
        1e-6,
        Some(format!("sup of projection norms {s_sup:.6}; full-rank error {:.3e}", primal[r])),
    ));

    // Dual representation T'g = Σ (T'g)(xₙ)ξₙ and ‖R_{m+1}T' − T'‖ ≤ ‖TS_{m+1} − T‖.
    let mut gs: Vec<DVector<f64>> = dec.steps.iter().map(|s| s.g.entries().clone()).collect();
    gs.extend(sample_vectors(&tgt, cfg.samples, cfg.seed ^ 0xd0a1));
    let mut dev = 0.0_f64;
    for g in &gs {
        let tg = a.transpose() * g;
        let rep = &xi * (x.transpose() * &tg);
        let gn = tgt.dual_norm_of(g.as_slice());
        dev = dev.max(src.dual_norm_of((tg - rep).as_slice()) / (scale * gn));
    }
    out.push(prop("dual_representation", dev, 1e-7, None));
    let adj = t.adjoint();
    let mut dual_excess = 0.0_f64;
    for (m, err) in primal.iter().enumerate() {
        let s = dec.s_matrix(m)?;
        let d = operator_norm(s.transpose() * a.transpose() - a.transpose(), &adj, &cfg.power)?;
        dual_excess = dual_excess.max((d - err) / scale);
    }
    out.push(prop("dual_truncation_bound", dual_excess, 1e-6, None));

    if dec.steps.iter().any(|s| s.lambda.is_some()) {
        out.push(eigen_checks(t, dec)?);
    }

    Ok(VerifyReport {
        all_pass: out.iter().all(|p| p.pass),
        properties: out,
    })
}

fn eigen_checks(t: &DenseOperator, dec: &Decomposition) -> Result<PropertyCheck> {
    let a = t.entries();
    let src = *t.source();
    let scale = dec.steps.first().map_or(1.0, |s| s.norm).max(1.0);
    let fs = dec.fs();
    let mut worst = 0.0_f64;
    for (j, s) in dec.steps.iter().enumerate() {
        let lambda = s.lambda.ok_or_else(|| Error::InvalidArgument(format!("step {} lacks lambda", j + 1)))?;
        let tx = a * s.x.entries();
        worst = worst.max(src.norm_of((tx - s.x.entries() * lambda).as_slice()) / scale);
        let xj = if j == 0 {
            SubspaceBasis::full(src)
        } else {
            operators::annihilator(&fs[..j], src)?
        };
        let resid = a.transpose() * s.f.entries() - s.f.entries() * lambda;
        worst = worst.max(restricted_dual_norm(&src, &xj, &resid)? / scale);
    }
    Ok(prop("eigen_relations", worst, 1e-6, None))
}

fn min_normalized_sv(m: &DMatrix<f64>) -> f64 {
    let mut m = m.clone();
    for mut c in m.column_iter_mut() {
        let n = c.norm();
        if n > 0.0 {
            c /= n;
        }
    }
    linalg::min_singular_value(&m)
}

/// Orthonormal basis of `ker A` from the SVD with a relative rank cutoff.
fn numerical_null_space(a: &DMatrix<f64>) -> DMatrix<f64> {
    let (rows, cols) = a.shape();
    let padded = if rows < cols {
        let mut p = DMatrix::zeros(cols, cols);
        p.rows_mut(0, rows).copy_from(a);
        p
    } else {
        a.clone()
    };
    let svd = padded.svd(false, true);
    let vt = svd.v_t.expect("v_t requested");
    let smax = svd.singular_values.max();
    let idx: Vec<usize> = (0..svd.singular_values.len())
        .filter(|&i| svd.singular_values[i] <= 1e-10 * smax)
        .collect();
    DMatrix::from_fn(cols, idx.len(), |i, c| vt[(idx[c], i)])
}

/// Replace `ξ₁` by `ξ₁ + eps·f₂` (used to exercise failure paths).
pub fn perturb_xi(dec: &mut Decomposition, eps: f64) -> Result<()> {
    if dec.rank() < 2 {
        return Err(Error::InvalidArgument("need at least two steps".into()));
    }
    let v = dec.xi[0].entries() + dec.steps[1].f.entries() * eps;
    dec.xi[0] = Functional::new(v, dec.source)?;
    Ok(())
}
