//! Minimum-norm points of affine sets.
//!
//! Every convex subproblem in the crate (Hahn–Banach extension, linear
//! maximization over a subspace ball, distance to a subspace, minimum-norm
//! interpolation) reduces to
//!
//! ```text
//!     minimize ‖e + Q·w‖   over w,      Q with orthonormal columns.
//! ```
//!
//! `ℓ²` is solved in closed form, `ℓᵖ` with `1 < p < ∞` by damped Newton (on
//! the primal for `p > 2`, on the dual for `p < 2`, so the Hessian weights
//! never blow up), and the polyhedral / second-order-cone norms by the
//! Clarabel interior-point solver. Each route reports a lower bound on the
//! optimal value from a dual-feasible point.

use clarabel::algebra::CscMatrix;
use clarabel::solver::{
    DefaultSettings, DefaultSolver, IPSolver, SolverStatus, SupportedConeT,
};
use nalgebra::{DMatrix, DVector};

use super::norm::{NormKind, NormSpec};
use crate::error::{Error, Result};
use crate::linalg;

#[derive(Debug, Clone)]
pub(crate) struct ImageSolution {
    pub z: DVector<f64>,
    pub value: f64,
    /// Certified lower bound on the optimal value.
    pub lower_bound: f64,
}

impl ImageSolution {
    pub fn gap(&self) -> f64 {
        (self.value - self.lower_bound).max(0.0)
    }
}

/// Minimize `N(e + Q w)`; `q` must have orthonormal columns.
pub(crate) fn minimize_over_image(
    space: &NormSpec,
    q: &DMatrix<f64>,
    e: &DVector<f64>,
) -> Result<ImageSolution> {
    let (d, n) = q.shape();
    debug_assert_eq!(d, e.len());
    let scale = e.amax();
    if n == 0 || scale == 0.0 {
        let value = space.norm_of(e.as_slice());
        return Ok(ImageSolution {
            z: e.clone(),
            value,
            lower_bound: value,
        });
    }
    let e_hat = e / scale;
    let (w_hat, lb_hat) = match space.kind() {
        NormKind::Lp { p, .. } if p == 2.0 => {
            let w = -(q.transpose() * &e_hat);
            let z = &e_hat + q * &w;
            (w, z.norm())
        }
        NormKind::Lp { p, .. } if p > 2.0 && p.is_finite() => primal_newton(p, q, &e_hat),
        NormKind::Lp { p, .. } if p > 1.0 && p < 2.0 => dual_newton(p, q, &e_hat),
        _ => conic(space, q, &e_hat)?,
    };
    let w = w_hat * scale;
    let z = e + q * &w;
    let value = space.norm_of(z.as_slice());
    Ok(ImageSolution {
        z,
        value,
        lower_bound: (lb_hat * scale).min(value),
    })
}

fn psi(v: f64, s: f64) -> f64 {
    v.signum() * v.abs().powf(s - 1.0)
}

fn lp_pow(z: &DVector<f64>, p: f64) -> f64 {
    z.iter().map(|v| v.abs().powf(p)).sum::<f64>() / p
}

/// Damped Newton on `½`-free objective `Σ|zᵢ|ᵖ/p`, `z = e + Qw`, for `p > 2`.
fn primal_newton(p: f64, q: &DMatrix<f64>, e: &DVector<f64>) -> (DVector<f64>, f64) {
    let n = q.ncols();
    let mut w = -(q.transpose() * e);
    let objective = |w: &DVector<f64>| lp_pow(&(e + q * w), p);
    let mut f = objective(&w);
    for _ in 0..300 {
        let z = e + q * &w;
        let grad_z = z.map(|v| psi(v, p));
        let g = q.transpose() * &grad_z;
        let weights = z.map(|v| (p - 1.0) * v.abs().powf(p - 2.0));
        let step = newton_direction(q, &weights, &g, n);
        let slope = g.dot(&step);
        if !(slope < 0.0) || -slope <= 1e-30 * f.max(1e-300) {
            break;
        }
        let Some((w_new, f_new)) = backtrack(&w, &step, f, slope, &objective) else {
            break;
        };
        let improvement = f - f_new;
        w = w_new;
        f = f_new;
        if improvement <= 1e-16 * f {
            break;
        }
    }
    // Dual-feasible point: project ψ(z) onto ker Qᵀ.
    let z = e + q * &w;
    let mut u = z.map(|v| psi(v, p));
    u -= q * (q.transpose() * &u);
    let qexp = p / (p - 1.0);
    let un = super::norm::lp_norm(u.as_slice(), qexp);
    let lb = if un > 0.0 { u.dot(e) / un } else { 0.0 };
    (w, lb)
}

/// Damped Newton on the dual `min Σ|(Pλ)ᵢ|^q/q − cᵀλ`, `c = Pᵀe`, for `1 < p < 2`.
fn dual_newton(p: f64, q: &DMatrix<f64>, e: &DVector<f64>) -> (DVector<f64>, f64) {
    let qexp = p / (p - 1.0);
    let comp = linalg::orthonormal_complement(q);
    let m = comp.ncols();
    let c = comp.transpose() * e;
    if m == 0 || c.amax() <= 1e-15 {
        // e lies in range(Q): the optimum is z = 0.
        return (-(q.transpose() * e), 0.0);
    }
    let objective = |lam: &DVector<f64>| lp_pow(&(&comp * lam), qexp) - c.dot(lam);
    let mut lam = c.clone();
    let mut f = objective(&lam);
    for _ in 0..300 {
        let h = &comp * &lam;
        let z = h.map(|v| psi(v, qexp));
        let g = comp.transpose() * &z - &c;
        let weights = h.map(|v| (qexp - 1.0) * v.abs().powf(qexp - 2.0));
        let step = newton_direction(&comp, &weights, &g, m);
        let slope = g.dot(&step);
        if !(slope < 0.0) || -slope <= 1e-30 * f.abs().max(1e-300) {
            break;
        }
        let Some((lam_new, f_new)) = backtrack(&lam, &step, f, slope, &objective) else {
            break;
        };
        let improvement = f - f_new;
        lam = lam_new;
        f = f_new;
        if improvement <= 1e-16 * f.abs() {
            break;
        }
    }
    let h = &comp * &lam;
    let mut z = h.map(|v| psi(v, qexp));
    // Exact feasibility: z ∈ e + range(Q)  ⇔  Pᵀz = c.
    let resid = comp.transpose() * &z - &c;
    z -= &comp * resid;
    let w = q.transpose() * (&z - e);
    let hn = super::norm::lp_norm(h.as_slice(), qexp);
    let lb = if hn > 0.0 { c.dot(&lam) / hn } else { 0.0 };
    (w, lb)
}

fn newton_direction(
    basis: &DMatrix<f64>,
    weights: &DVector<f64>,
    g: &DVector<f64>,
    n: usize,
) -> DVector<f64> {
    let mut scaled = basis.clone();
    for (i, mut row) in scaled.row_iter_mut().enumerate() {
        row *= weights[i];
    }
    let mut h = basis.transpose() * scaled;
    let wmax = weights.amax().max(1e-300);
    for i in 0..n {
        h[(i, i)] += 1e-13 * wmax;
    }
    match h.clone().cholesky() {
        Some(ch) => -ch.solve(g),
        None => -linalg::min_norm_solve(&h, g),
    }
}

fn backtrack<F: Fn(&DVector<f64>) -> f64>(
    x: &DVector<f64>,
    step: &DVector<f64>,
    f: f64,
    slope: f64,
    objective: &F,
) -> Option<(DVector<f64>, f64)> {
    let mut t = 1.0;
    while t > 1e-14 {
        let cand = x + step * t;
        let fc = objective(&cand);
        if fc <= f + 0.25 * t * slope {
            return Some((cand, fc));
        }
        t *= 0.5;
    }
    None
}

/// Rows `L·x + l₀ ∈ cone` collected as Clarabel's `b − A·x ∈ cone`.
struct ConicRows {
    a: Vec<Vec<f64>>,
    b: Vec<f64>,
    nvars: usize,
}

impl ConicRows {
    fn new(nvars: usize) -> Self {
        Self {
            a: Vec::new(),
            b: Vec::new(),
            nvars,
        }
    }

    /// `sign·zᵢ + Σ coef·aux ∈ cone` with `zᵢ = eᵢ + (Qw)ᵢ`.
    fn push_z(&mut self, q: &DMatrix<f64>, e: &DVector<f64>, i: usize, sign: f64, aux: &[(usize, f64)]) {
        let mut row = vec![0.0; self.nvars];
        for j in 0..q.ncols() {
            row[j] = -sign * q[(i, j)];
        }
        for &(col, coef) in aux {
            row[col] -= coef;
        }
        self.a.push(row);
        self.b.push(sign * e[i]);
    }

    fn push_aux(&mut self, col: usize) {
        let mut row = vec![0.0; self.nvars];
        row[col] = -1.0;
        self.a.push(row);
        self.b.push(0.0);
    }
}

fn conic(space: &NormSpec, q: &DMatrix<f64>, e: &DVector<f64>) -> Result<(DVector<f64>, f64)> {
    let (d, n) = q.shape();
    let (k_abs, tail, per_coord_aux) = match space.kind() {
        NormKind::Lp { p, .. } if p == 1.0 => (d, false, true),
        NormKind::Lp { .. } => (d, false, false),
        NormKind::MixedK1 { k } => (k, true, true),
        NormKind::MixedKinf { k } => (k, true, false),
    };
    // Variables: w, then per-coordinate bounds t (ℓ¹ blocks) or one shared bound s.
    let n_t = if per_coord_aux { k_abs } else { 0 };
    let s_col = n + n_t;
    let has_s = !per_coord_aux || tail;
    let nvars = n + n_t + usize::from(has_s);
    let mut cost = vec![0.0; nvars];
    for c in cost.iter_mut().skip(n).take(n_t) {
        *c = 1.0;
    }
    if has_s {
        cost[s_col] = 1.0;
    }
    let mut rows = ConicRows::new(nvars);
    for i in 0..k_abs {
        let bound = if per_coord_aux { n + i } else { s_col };
        rows.push_z(q, e, i, -1.0, &[(bound, 1.0)]);
        rows.push_z(q, e, i, 1.0, &[(bound, 1.0)]);
    }
    let mut cones = vec![SupportedConeT::NonnegativeConeT(2 * k_abs)];
    if tail {
        rows.push_aux(s_col);
        for i in k_abs..d {
            rows.push_z(q, e, i, 1.0, &[]);
        }
        cones.push(SupportedConeT::SecondOrderConeT(1 + d - k_abs));
    }
    let a = CscMatrix::from(&rows.a);
    let p = CscMatrix::<f64>::zeros((nvars, nvars));
    let tight = DefaultSettings::<f64> {
        verbose: false,
        max_iter: 200,
        tol_gap_abs: 1e-12,
        tol_gap_rel: 1e-12,
        tol_feas: 1e-12,
        tol_ktratio: 1e-10,
        reduced_tol_gap_abs: 1e-9,
        reduced_tol_gap_rel: 1e-9,
        reduced_tol_feas: 1e-9,
        ..DefaultSettings::default()
    };
    let loose = DefaultSettings::<f64> {
        verbose: false,
        max_iter: 400,
        ..DefaultSettings::default()
    };
    let mut last = String::new();
    // The tight pass can stall on badly scaled instances; the default
    // tolerances then still give a usable, certified answer.
    for (settings, accept_gap) in [(tight, 1e-8), (loose, 1e-6)] {
        let mut solver = DefaultSolver::new(&p, &cost, &a, &rows.b, &cones, settings)
            .map_err(|err| Error::Solver(format!("{err:?}")))?;
        solver.solve();
        let sol = &solver.solution;
        let w = DVector::from_column_slice(&sol.x[..n]);
        let value = space.norm_of((e + q * &w).as_slice());
        let lower = sol.obj_val_dual;
        let small_gap = lower.is_finite() && value - lower <= accept_gap * value.max(f64::MIN_POSITIVE);
        match sol.status {
            SolverStatus::Solved | SolverStatus::AlmostSolved if lower.is_finite() => return Ok((w, lower)),
            SolverStatus::InsufficientProgress | SolverStatus::MaxIterations if small_gap => return Ok((w, lower)),
            other => last = format!("status {other:?}"),
        }
    }
    Err(Error::Solver(last))
}

/// Move an optimal `ℓ¹` solution of `A z = b` to a vertex of the optimal face,
/// zeroing the highest-index coordinate whenever a choice exists, then re-solve
/// the support system exactly.
pub(crate) fn purify_l1(a: &DMatrix<f64>, b: &DVector<f64>, z: &DVector<f64>) -> DVector<f64> {
    let d = z.len();
    let mut z = z.clone();
    let zmax = z.amax();
    if zmax == 0.0 {
        return z;
    }
    let thr = 1e-8 * zmax;
    for i in 0..d {
        if z[i].abs() <= thr {
            z[i] = 0.0;
        }
    }
    let objective = |v: &DVector<f64>| v.iter().map(|x| x.abs()).sum::<f64>();
    let start_obj = objective(&z);
    for _ in 0..d {
        let support: Vec<usize> = (0..d).filter(|&i| z[i] != 0.0).collect();
        if support.is_empty() {
            break;
        }
        let a_s = a.select_columns(&support);
        let svd = a_s.clone().svd(false, true);
        let sv = &svd.singular_values;
        let smax = sv.max();
        let vt = svd.v_t.expect("v_t requested");
        // Null direction of A_S: right singular vector with tiny singular value,
        // or any leftover direction when A_S is wide.
        let null = if support.len() > vt.nrows() {
            let rowspace = linalg::orthonormalize(&vt.transpose()).unwrap_or_else(|| vt.transpose());
            let comp = linalg::orthonormal_complement(&rowspace);
            (comp.ncols() > 0).then(|| comp.column(0).into_owned())
        } else {
            let (imin, smin) = sv.iter().enumerate().fold((0, f64::INFINITY), |acc, (i, v)| {
                if *v < acc.1 {
                    (i, *v)
                } else {
                    acc
                }
            });
            (smin <= 1e-11 * smax.max(1e-300)).then(|| vt.row(imin).transpose())
        };
        let Some(delta_s) = null else { break };
        let mut best: Option<(usize, f64)> = None;
        let slope: f64 = support
            .iter()
            .enumerate()
            .map(|(c, &i)| z[i].signum() * delta_s[c])
            .sum();
        for dir in [1.0, -1.0] {
            // Only directions that do not increase the objective.
            if dir * slope > 1e-9 * delta_s.amax() {
                continue;
            }
            let mut t_block = f64::INFINITY;
            let mut block = usize::MAX;
            for (c, &i) in support.iter().enumerate() {
                let di = dir * delta_s[c];
                if z[i] * di < 0.0 {
                    let t = -z[i] / di;
                    if t < t_block - 1e-15 * t_block.abs().min(1e300) || (t <= t_block && i > block) {
                        t_block = t;
                        block = i;
                    }
                }
            }
            if block != usize::MAX && best.map_or(true, |(bi, _)| block > bi) {
                best = Some((block, dir * t_block));
            }
        }
        let Some((block, t)) = best else { break };
        for (c, &i) in support.iter().enumerate() {
            z[i] += t * delta_s[c];
        }
        z[block] = 0.0;
        for i in 0..d {
            if z[i].abs() <= thr {
                z[i] = 0.0;
            }
        }
    }
    // Re-solve the support system for an exact vertex.
    let support: Vec<usize> = (0..d).filter(|&i| z[i] != 0.0).collect();
    if !support.is_empty() {
        let a_s = a.select_columns(&support);
        let zs = linalg::min_norm_solve(&a_s, b);
        let mut polished = DVector::zeros(d);
        let mut consistent = true;
        for (c, &i) in support.iter().enumerate() {
            if zs[c].signum() != z[i].signum() {
                consistent = false;
            }
            polished[i] = zs[c];
        }
        let resid = (a * &polished - b).amax();
        if consistent && resid <= 1e-12 * (b.amax() + 1.0) && objective(&polished) <= start_obj * (1.0 + 1e-9) {
            return polished;
        }
    }
    z
}
