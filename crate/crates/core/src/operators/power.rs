//! Operator norms by generalized power iteration (alternating maximization).
//!
//! From a unit `x` in the subspace: `g = J(Tx)`, `h = T'g`, and the next
//! iterate maximizes `h` over the unit ball of the subspace. `‖Tx‖` never
//! decreases, and at a fixed point `‖(T'g)|_M‖_* = ‖Tx‖`, which is the
//! reported certificate.

use std::cmp::Ordering;

use nalgebra::{DMatrix, DVector};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::DenseOperator;
use crate::error::{Error, Result};
use crate::linalg;
use crate::spaces::{self, minnorm, DualityConfig, NormSpec, SubspaceBasis, Vector};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct PowerConfig {
    /// Random starting points on top of the basis and dual starts.
    pub restarts: usize,
    /// Relative change of `‖Tx‖` below which a run stops.
    pub tol: f64,
    /// Iteration budget per run.
    pub max_iter: usize,
    pub seed: u64,
    pub duality: DualityConfig,
}

impl Default for PowerConfig {
    fn default() -> Self {
        Self {
            restarts: 16,
            tol: 1e-14,
            max_iter: 2000,
            seed: 0,
            duality: DualityConfig::default(),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct NormAttainResult {
    /// Unit vector (in the full source space) lying in the subspace.
    pub maximizer: Vector,
    pub value: f64,
    /// `‖(T'g)|_M‖_* − ‖Tx‖` at the maximizer, `g = J(Tx)`; zero at an
    /// exact stationary point.
    pub certificate_gap: f64,
    pub restarts_used: usize,
    /// Iterations of the winning run.
    pub iterations: usize,
    /// `‖Tx_t‖` along the winning run (nondecreasing).
    pub trace: Vec<f64>,
}

/// Upper bound on `‖T|_M‖` from `ℓ²` equivalence constants.
pub(crate) fn restriction_upper_bound(t: &DenseOperator, basis: &SubspaceBasis) -> f64 {
    if basis.dim() == 0 {
        return 0.0;
    }
    let (lo_x, _) = t.source().l2_equivalence();
    let (_, hi_y) = t.target().l2_equivalence();
    hi_y * linalg::spectral_norm(&(t.entries() * basis.columns())) / lo_x
}

/// Maximize `h(x)` over `{x ∈ span B : ‖x‖ ≤ 1}`. Returns the maximizer, the
/// attained value and a certified upper bound on the maximum.
pub(crate) fn restricted_dual_max(
    space: &NormSpec,
    basis: &SubspaceBasis,
    h: &DVector<f64>,
    duality: &DualityConfig,
) -> Result<Option<(DVector<f64>, f64, f64)>> {
    let Some((u, nu)) = spaces::ball_argmax(space, h.as_slice(), duality) else {
        return Ok(None);
    };
    if basis.is_full() || basis.membership_residual(&u) <= 1e-13 {
        return Ok(Some((u, nu, nu)));
    }
    let b = basis.columns();
    let c = b.transpose() * h;
    let cn2 = c.norm_squared();
    if cn2 <= (1e-15 * h.norm()).powi(2) {
        return Ok(None);
    }
    let kc = linalg::orthonormal_complement(&DMatrix::from_column_slice(c.len(), 1, (&c / cn2.sqrt()).as_slice()));
    let q = b * kc;
    let e = b * (&c / cn2);
    let sol = minnorm::minimize_over_image(space, &q, &e)?;
    if sol.value <= 0.0 {
        return Err(Error::Solver("degenerate restricted maximization".into()));
    }
    let x = &sol.z / sol.value;
    let upper = if sol.lower_bound > 0.0 {
        1.0 / sol.lower_bound
    } else {
        f64::INFINITY
    };
    Ok(Some((x, 1.0 / sol.value, upper)))
}

struct Run {
    x: DVector<f64>,
    value: f64,
    gap: f64,
    iterations: usize,
    trace: Vec<f64>,
}

fn run_from(t: &DenseOperator, basis: &SubspaceBasis, x0: DVector<f64>, cfg: &PowerConfig) -> Result<Run> {
    let a = t.entries();
    let (src, tgt) = (t.source(), t.target());
    let mut x = x0;
    let mut value = tgt.norm_of((a * &x).as_slice());
    let mut trace = vec![value];
    let mut gap = f64::INFINITY;
    let mut iterations = 0;
    let mut last_move = f64::INFINITY;
    while iterations < cfg.max_iter {
        iterations += 1;
        let y = a * &x;
        let Some(g) = spaces::select_raw(tgt, y.as_slice(), &cfg.duality) else {
            gap = 0.0;
            break;
        };
        let h = a.transpose() * g;
        let Some((next, _, upper)) = restricted_dual_max(src, basis, &h, &cfg.duality)? else {
            gap = 0.0;
            break;
        };
        gap = (upper - value).max(0.0);
        let next_value = tgt.norm_of((a * &next).as_slice());
        if next_value < value * (1.0 - 4.0 * f64::EPSILON) {
            break;
        }
        let moved = (&next - &x).amax();
        let stagnant = next_value <= value * (1.0 + cfg.tol);
        x = next;
        value = value.max(next_value);
        trace.push(value);
        // The value settles quadratically faster than the iterate, so stop on
        // the iterate: when the geometric tail of its moves is negligible, or
        // when it no longer contracts and the value has stalled.
        let rho = moved / last_move;
        let tail = if last_move.is_finite() && rho < 1.0 { moved * rho / (1.0 - rho) } else { f64::INFINITY };
        if moved <= 1e-13 || tail <= 1e-13 || (stagnant && rho >= 1.0) {
            break;
        }
        last_move = moved;
    }
    Ok(Run {
        x,
        value,
        gap,
        iterations,
        trace,
    })
}

fn sign_normalized(mut x: DVector<f64>) -> DVector<f64> {
    let amax = x.amax();
    if let Some(first) = x.iter().find(|v| v.abs() > 1e-12 * amax).copied() {
        if first < 0.0 {
            x.neg_mut();
        }
    }
    x
}

/// Lexicographic comparison that ignores differences below round-off.
fn lex_cmp(a: &DVector<f64>, b: &DVector<f64>) -> Ordering {
    for (u, v) in a.iter().zip(b.iter()) {
        if (u - v).abs() > 1e-9 {
            return u.partial_cmp(v).unwrap_or(Ordering::Equal);
        }
    }
    Ordering::Equal
}

/// Prefer the larger value; on (relative) ties the lexicographically
/// largest sign-normalized maximizer, so mass on lower indices wins.
fn better(a: &Run, b: &Run) -> bool {
    let scale = a.value.max(b.value);
    if (a.value - b.value).abs() > 1e-10 * scale {
        return a.value > b.value;
    }
    lex_cmp(&a.x, &b.x) == Ordering::Greater
}

fn hilbert(t: &DenseOperator, basis: &SubspaceBasis) -> Result<NormAttainResult> {
    let m = t.entries() * basis.columns();
    let eig = (m.transpose() * &m).symmetric_eigen();
    let mut best = 0;
    for i in 1..eig.eigenvalues.len() {
        if eig.eigenvalues[i] > eig.eigenvalues[best] {
            best = i;
        }
    }
    let lam = eig.eigenvalues[best].max(0.0);
    if lam == 0.0 {
        return Err(Error::ZeroRestriction);
    }
    let x = sign_normalized(basis.columns() * eig.eigenvectors.column(best));
    let x = &x / x.norm();
    let value = (t.entries() * &x).norm();
    Ok(NormAttainResult {
        maximizer: Vector::new(x, *t.source())?,
        value,
        certificate_gap: (lam.sqrt() - value).abs(),
        restarts_used: 0,
        iterations: 1,
        trace: vec![value],
    })
}

/// Estimate `‖T|_{span B}‖` with a maximizer, by multistart generalized power
/// iteration. In the Hilbert case the top eigenpair of the restricted Gram
/// matrix is used directly.
pub fn op_norm_power(t: &DenseOperator, basis: &SubspaceBasis, cfg: &PowerConfig) -> Result<NormAttainResult> {
    if basis.parent() != t.source() {
        return Err(Error::InvalidArgument("subspace does not live in the source space".into()));
    }
    if basis.dim() == 0 || restriction_upper_bound(t, basis) == 0.0 {
        return Err(Error::ZeroRestriction);
    }
    if t.source().is_hilbert() && t.target().is_hilbert() {
        return hilbert(t, basis);
    }
    let src = *t.source();
    let b = basis.columns();
    let unit = |x: DVector<f64>| -> Option<DVector<f64>> {
        let n = src.norm_of(x.as_slice());
        (n > 0.0).then(|| x / n)
    };

    let mut starts: Vec<DVector<f64>> = Vec::new();
    starts.extend((0..basis.dim()).filter_map(|j| unit(b.column(j).into_owned())));
    for i in 0..t.shape().0 {
        let row = t.entries().row(i).transpose();
        if let Some((x, _, _)) = restricted_dual_max(&src, basis, &row, &cfg.duality)? {
            starts.push(x);
        }
    }
    for r in 0..cfg.restarts {
        let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed.wrapping_mul(0x9E37_79B9_7F4A_7C15).wrapping_add(r as u64));
        let z = DVector::from_fn(basis.dim(), |_, _| StandardNormal.sample(&mut rng));
        starts.extend(unit(b * z));
    }
    let used = starts.len();

    let runs: Vec<Result<Run>> = starts.into_par_iter().map(|x0| run_from(t, basis, x0, cfg)).collect();
    let mut best: Option<Run> = None;
    for run in runs {
        let mut run = run?;
        run.x = sign_normalized(run.x);
        if best.as_ref().map_or(true, |b| better(&run, b)) {
            best = Some(run);
        }
    }
    let best = best.ok_or(Error::ZeroRestriction)?;
    if best.value == 0.0 {
        return Err(Error::ZeroRestriction);
    }
    Ok(NormAttainResult {
        maximizer: Vector::new(best.x, src)?,
        value: best.value,
        certificate_gap: best.gap,
        restarts_used: used,
        iterations: best.iterations,
        trace: best.trace,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::Rng;

    fn op(rows: usize, cols: usize, data: &[f64], src: NormSpec, tgt: NormSpec) -> DenseOperator {
        DenseOperator::new(DMatrix::from_row_slice(rows, cols, data), src, tgt).unwrap()
    }

    #[test]
    fn diagonal_dominant_direction() {
        let s = NormSpec::lp(2.0, 2).unwrap();
        let t = op(2, 2, &[3.0, 0.0, 0.0, 1.0], s, s);
        let r = op_norm_power(&t, &SubspaceBasis::full(s), &PowerConfig::default()).unwrap();
        assert!((r.value - 3.0).abs() < 1e-14);
        assert!((r.maximizer.entries()[0] - 1.0).abs() < 1e-14);
    }

    #[test]
    fn monotone_trace_and_column_rule() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        for q in [1.0, 1.5, 3.0, f64::INFINITY] {
            let src = NormSpec::lp(1.0, 4).unwrap();
            let tgt = NormSpec::lp(q, 3).unwrap();
            let t = DenseOperator::new(DMatrix::from_fn(3, 4, |_, _| rng.gen_range(-1.0..1.0)), src, tgt).unwrap();
            let r = op_norm_power(&t, &SubspaceBasis::full(src), &PowerConfig::default()).unwrap();
            let exact = (0..4)
                .map(|j| tgt.norm_of(t.entries().column(j).as_slice()))
                .fold(0.0, f64::max);
            assert!((r.value - exact).abs() <= 1e-12 * exact, "q={q}");
            assert!(r.trace.windows(2).all(|w| w[1] >= w[0]));
        }
    }

    #[test]
    fn subspace_never_exceeds_full_space() {
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        let src = NormSpec::mixed_k1(2, 5).unwrap();
        let tgt = NormSpec::lp(3.0, 4).unwrap();
        let t = DenseOperator::new(DMatrix::from_fn(4, 5, |_, _| rng.gen_range(-1.0..1.0)), src, tgt).unwrap();
        let cfg = PowerConfig::default();
        let full = op_norm_power(&t, &SubspaceBasis::full(src), &cfg).unwrap();
        let cols = DMatrix::from_fn(5, 3, |_, _| rng.gen_range(-1.0..1.0));
        let sub = SubspaceBasis::from_columns(&cols, src).unwrap();
        let r = op_norm_power(&t, &sub, &cfg).unwrap();
        assert!(r.value <= full.value * (1.0 + 1e-9));
        assert!(sub.membership_residual(r.maximizer.entries()) < 1e-10);
        assert!((src.norm_of(r.maximizer.entries().as_slice()) - 1.0).abs() < 1e-10);
        assert!(r.certificate_gap <= 1e-7 * r.value, "gap {}", r.certificate_gap);
    }

    #[test]
    fn zero_restriction_is_an_error() {
        let s = NormSpec::lp(3.0, 2).unwrap();
        let t = op(2, 2, &[1.0, 0.0, 0.0, 0.0], s, s);
        let sub = SubspaceBasis::from_columns(&DMatrix::from_row_slice(2, 1, &[0.0, 1.0]), s).unwrap();
        assert_eq!(op_norm_power(&t, &sub, &PowerConfig::default()), Err(Error::ZeroRestriction));
    }

    #[test]
    fn ties_prefer_lowest_index() {
        let s = NormSpec::lp(4.0, 3).unwrap();
        let t = op(3, 3, &[1.0, 0.0, 0.0, 0.0, 1.0, 0.0, 0.0, 0.0, 1.0], s, s);
        let r = op_norm_power(&t, &SubspaceBasis::full(s), &PowerConfig::default()).unwrap();
        assert_eq!(r.maximizer.entries().as_slice(), &[1.0, 0.0, 0.0]);
    }
}
