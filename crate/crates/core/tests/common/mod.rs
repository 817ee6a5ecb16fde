//! Reference implementations used only by the tests. None of them call into
//! the library's numerical kernels.
#![allow(dead_code)]

use nalgebra::{DMatrix, DVector};
use normdeflate::{NormKind, NormSpec};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

pub fn gaussian(rng: &mut ChaCha8Rng, r: usize, c: usize) -> DMatrix<f64> {
    DMatrix::from_fn(r, c, |_, _| rng.sample(StandardNormal))
}

pub fn gaussian_vec(rng: &mut ChaCha8Rng, d: usize) -> DVector<f64> {
    DVector::from_fn(d, |_, _| rng.sample(StandardNormal))
}

/// `G·H` with Gaussian factors: rank `k` almost surely.
pub fn rank_k(rng: &mut ChaCha8Rng, r: usize, c: usize, k: usize) -> DMatrix<f64> {
    gaussian(rng, r, k) * gaussian(rng, k, c)
}

fn lp(v: &[f64], p: f64) -> f64 {
    if p.is_infinite() {
        v.iter().fold(0.0, |m, x| m.max(x.abs()))
    } else if p == 1.0 {
        v.iter().map(|x| x.abs()).sum()
    } else if p == 2.0 {
        v.iter().map(|x| x * x).sum::<f64>().sqrt()
    } else {
        let m = v.iter().fold(0.0, |m: f64, x| m.max(x.abs()));
        if m == 0.0 {
            return 0.0;
        }
        m * v.iter().map(|x| (x.abs() / m).powf(p)).sum::<f64>().powf(1.0 / p)
    }
}

/// The norm described by `spec`, evaluated from its defining formula.
pub fn norm(spec: &NormSpec, v: &[f64]) -> f64 {
    match spec.kind() {
        NormKind::Lp { p, .. } => lp(v, p),
        NormKind::MixedK1 { k } => lp(&v[..k], 1.0) + lp(&v[k..], 2.0),
        NormKind::MixedKinf { k } => lp(&v[..k], f64::INFINITY).max(lp(&v[k..], 2.0)),
    }
}

/// The dual norm, again from the formula: `ℓᵖ ↔ ℓ^{p/(p−1)}`, `(k,1) ↔ (k,∞)`.
pub fn dual_norm(spec: &NormSpec, f: &[f64]) -> f64 {
    match spec.kind() {
        NormKind::Lp { p, .. } => {
            let q = if p == 1.0 {
                f64::INFINITY
            } else if p.is_infinite() {
                1.0
            } else {
                p / (p - 1.0)
            };
            lp(f, q)
        }
        NormKind::MixedK1 { k } => lp(&f[..k], f64::INFINITY).max(lp(&f[k..], 2.0)),
        NormKind::MixedKinf { k } => lp(&f[..k], 1.0) + lp(&f[k..], 2.0),
    }
}

/// Singular values (descending) by one-sided Jacobi rotations.
pub fn jacobi_singular_values(a: &DMatrix<f64>) -> Vec<f64> {
    let mut u = if a.nrows() >= a.ncols() { a.clone() } else { a.transpose() };
    let n = u.ncols();
    for _sweep in 0..100 {
        let mut rotated = false;
        for i in 0..n {
            for j in i + 1..n {
                let alpha = u.column(i).norm_squared();
                let beta = u.column(j).norm_squared();
                let gamma = u.column(i).dot(&u.column(j));
                if gamma.abs() <= 1e-15 * (alpha * beta).sqrt() || gamma == 0.0 {
                    continue;
                }
                rotated = true;
                let zeta = (beta - alpha) / (2.0 * gamma);
                let t = zeta.signum() / (zeta.abs() + (1.0 + zeta * zeta).sqrt());
                let t = if zeta == 0.0 { 1.0 } else { t };
                let c = 1.0 / (1.0 + t * t).sqrt();
                let s = c * t;
                for r in 0..u.nrows() {
                    let (ui, uj) = (u[(r, i)], u[(r, j)]);
                    u[(r, i)] = c * ui - s * uj;
                    u[(r, j)] = s * ui + c * uj;
                }
            }
        }
        if !rotated {
            break;
        }
    }
    let mut s: Vec<f64> = (0..n).map(|j| u.column(j).norm()).collect();
    s.sort_by(|a, b| b.total_cmp(a));
    s
}

/// Rank by Gaussian elimination with full pivoting.
pub fn elimination_rank(a: &DMatrix<f64>, rel_tol: f64) -> usize {
    let mut m = a.clone();
    let scale = m.amax().max(f64::MIN_POSITIVE);
    let (rows, cols) = m.shape();
    let mut rank = 0;
    while rank < rows.min(cols) {
        let mut best = (rank, rank, 0.0);
        for i in rank..rows {
            for j in rank..cols {
                if m[(i, j)].abs() > best.2 {
                    best = (i, j, m[(i, j)].abs());
                }
            }
        }
        if best.2 <= rel_tol * scale {
            break;
        }
        m.swap_rows(rank, best.0);
        m.swap_columns(rank, best.1);
        for i in rank + 1..rows {
            let factor = m[(i, rank)] / m[(rank, rank)];
            for j in rank..cols {
                m[(i, j)] -= factor * m[(rank, j)];
            }
        }
        rank += 1;
    }
    rank
}

/// `‖Ax‖_Y / ‖x‖_X`.
pub fn ratio(a: &DMatrix<f64>, src: &NormSpec, tgt: &NormSpec, x: &[f64]) -> f64 {
    let v = DVector::from_column_slice(x);
    let n = norm(src, x);
    if n == 0.0 {
        return 0.0;
    }
    norm(tgt, (a * v).as_slice()) / n
}

fn golden_max(f: impl Fn(f64) -> f64, mut lo: f64, mut hi: f64) -> (f64, f64) {
    let g = (5f64.sqrt() - 1.0) / 2.0;
    let mut x1 = hi - g * (hi - lo);
    let mut x2 = lo + g * (hi - lo);
    let (mut f1, mut f2) = (f(x1), f(x2));
    for _ in 0..200 {
        if f1 < f2 {
            lo = x1;
            x1 = x2;
            f1 = f2;
            x2 = lo + g * (hi - lo);
            f2 = f(x2);
        } else {
            hi = x2;
            x2 = x1;
            f2 = f1;
            x1 = hi - g * (hi - lo);
            f1 = f(x1);
        }
    }
    if f1 > f2 {
        (x1, f1)
    } else {
        (x2, f2)
    }
}

/// Maximum of `f` over the half circle by a dense angle grid plus golden
/// section around the best grid cells.
pub fn circle_max(f: impl Fn(&[f64]) -> f64) -> f64 {
    arc_max(f, std::f64::consts::PI)
}

/// As [`circle_max`] over angles `[0, span)`.
pub fn arc_max(f: impl Fn(&[f64]) -> f64, span: f64) -> f64 {
    let n = 20_000;
    let h = span / n as f64;
    let eval = |t: f64| f(&[t.cos(), t.sin()]);
    let mut vals: Vec<(f64, f64)> = (0..n).map(|i| (eval(i as f64 * h), i as f64 * h)).collect();
    vals.sort_by(|a, b| b.0.total_cmp(&a.0));
    let mut best = vals[0].0;
    for &(v, t) in vals.iter().take(12) {
        best = best.max(v).max(golden_max(eval, t - h, t + h).1);
    }
    best
}

/// Maximum of `f` over the unit sphere in ℝ³: latitude/longitude grid, then
/// shrinking local grids around the best grid points. Local grids (unlike
/// coordinate search) keep tracking maxima on ridges of nonsmooth norms.
pub fn sphere_max(f: impl Fn(&[f64]) -> f64) -> f64 {
    let pt = |th: f64, ph: f64| [th.sin() * ph.cos(), th.sin() * ph.sin(), th.cos()];
    let eval = |th: f64, ph: f64| f(&pt(th, ph));
    let (nt, np) = (300, 600);
    let (ht, hp) = (std::f64::consts::PI / nt as f64, 2.0 * std::f64::consts::PI / np as f64);
    let mut vals = Vec::with_capacity((nt + 1) * np);
    for i in 0..=nt {
        for j in 0..np {
            let (th, ph) = (i as f64 * ht, j as f64 * hp);
            vals.push((eval(th, ph), th, ph));
        }
    }
    vals.sort_by(|a, b| b.0.total_cmp(&a.0));
    let mut best = vals[0].0;
    for &(v0, th0, ph0) in vals.iter().take(24) {
        let (mut th, mut ph, mut v) = (th0, ph0, v0);
        let mut h = hp;
        while h > 1e-12 {
            let (c_th, c_ph) = (th, ph);
            for i in -6..=6 {
                for j in -6..=6 {
                    let (t2, p2) = (c_th + i as f64 * h, c_ph + j as f64 * h);
                    let w = eval(t2, p2);
                    if w > v {
                        (th, ph, v) = (t2, p2, w);
                    }
                }
            }
            h /= 4.0;
        }
        best = best.max(v);
    }
    for s in [[1.0, 0.0, 0.0], [0.0, 1.0, 0.0], [0.0, 0.0, 1.0]] {
        best = best.max(f(&s));
    }
    best
}

/// `max ‖Ax‖_Y` over the extreme points of a mixed unit ball in ℝ² or ℝ³:
/// finitely many points plus ℓ² circles in a two-dimensional tail, each
/// circle searched by a dense angle grid.
fn mixed_extreme_max(a: &DMatrix<f64>, src: &NormSpec, tgt: &NormSpec) -> f64 {
    let d = a.ncols();
    let value = |x: &[f64]| norm(tgt, (a * DVector::from_column_slice(x)).as_slice());
    // Head parts paired with the ℓ² unit sphere of the tail.
    let heads: Vec<Vec<f64>> = match src.kind() {
        NormKind::MixedK1 { k } => {
            let mut h = vec![vec![0.0; k]];
            for i in 0..k {
                for s in [1.0, -1.0] {
                    let mut e = vec![0.0; d];
                    e[i] = s;
                    h.push(e);
                }
            }
            h
        }
        NormKind::MixedKinf { k } => (0..1usize << k)
            .map(|bits| (0..k).map(|i| if bits >> i & 1 == 1 { -1.0 } else { 1.0 }).collect())
            .collect(),
        NormKind::Lp { .. } => unreachable!("mixed norms only"),
    };
    let mut best = 0.0_f64;
    for head in heads {
        if head.len() == d {
            // A head vertex of the (k,1) ball: the tail is zero.
            best = best.max(value(&head));
            continue;
        }
        let k = head.len();
        let with_tail = |u: &[f64]| {
            let mut x = head.clone();
            x.extend_from_slice(u);
            value(&x)
        };
        best = best.max(match d - k {
            1 => with_tail(&[1.0]).max(with_tail(&[-1.0])),
            2 => arc_max(with_tail, 2.0 * std::f64::consts::PI),
            n => panic!("tail of dimension {n} not supported"),
        });
    }
    best
}

/// `max ‖Ax‖/‖x‖` over ℝ² or ℝ³ by direct search (over the extreme points
/// of the unit ball for mixed source norms).
pub fn grid_op_norm(a: &DMatrix<f64>, src: &NormSpec, tgt: &NormSpec) -> f64 {
    if !matches!(src.kind(), NormKind::Lp { .. }) && a.ncols() <= 3 {
        return mixed_extreme_max(a, src, tgt);
    }
    match a.ncols() {
        1 => ratio(a, src, tgt, &[1.0]),
        2 => circle_max(|x| ratio(a, src, tgt, x)),
        3 => sphere_max(|x| ratio(a, src, tgt, x)),
        n => panic!("grid oracle supports at most 3 columns, got {n}"),
    }
}

/// Largest magnitude of `f` on the unit ball of `span B` for `dim B ≤ 2`,
/// with `f` given by its values `phi` on the columns of `B`.
pub fn restricted_dual_norm(b: &DMatrix<f64>, space: &NormSpec, phi: &[f64]) -> f64 {
    let val = |c: &[f64]| {
        let x = b * DVector::from_column_slice(c);
        let num: f64 = phi.iter().zip(c).map(|(p, c)| p * c).sum();
        num.abs() / norm(space, x.as_slice())
    };
    match b.ncols() {
        1 => val(&[1.0]),
        2 => circle_max(val),
        3 => sphere_max(val),
        n => panic!("restricted norm oracle supports at most 3 columns, got {n}"),
    }
}

/// Random doubly stochastic matrix as a convex combination of permutations.
pub fn doubly_stochastic(rng: &mut ChaCha8Rng, d: usize, terms: usize) -> DMatrix<f64> {
    let mut out = DMatrix::zeros(d, d);
    let weights: Vec<f64> = (0..terms).map(|_| rng.gen_range(0.1..1.0)).collect();
    let total: f64 = weights.iter().sum();
    for w in weights {
        let mut perm: Vec<usize> = (0..d).collect();
        for i in (1..d).rev() {
            perm.swap(i, rng.gen_range(0..=i));
        }
        for (i, &j) in perm.iter().enumerate() {
            out[(i, j)] += w / total;
        }
    }
    out
}
