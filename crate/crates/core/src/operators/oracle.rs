//! Reference values of `‖T‖` for cases that can be computed exactly or by
//! exhaustive search.

use std::f64::consts::PI;

use nalgebra::DVector;

use super::DenseOperator;
use crate::error::{Error, Result};
use crate::linalg;
use crate::spaces::NormKind;

const GRID_POINTS: usize = 100_000;

/// `‖T‖` by an exact rule when one applies (`ℓ¹` source: largest column
/// norm; `ℓ^∞` target: largest row dual norm; `ℓ²→ℓ²`: spectral norm), and
/// otherwise, for at most three source dimensions, by a dense grid over the
/// unit sphere followed by local polishing.
pub fn op_norm_oracle(t: &DenseOperator) -> Result<f64> {
    let (src, tgt) = (t.source(), t.target());
    let a = t.entries();
    if matches!(src.kind(), NormKind::Lp { p, .. } if p == 1.0) {
        return Ok(a.column_iter().map(|c| tgt.norm_of(c.as_slice())).fold(0.0, f64::max));
    }
    if matches!(tgt.kind(), NormKind::Lp { p, .. } if p.is_infinite()) {
        return Ok(a
            .row_iter()
            .map(|r| src.dual_norm_of(r.transpose().as_slice()))
            .fold(0.0, f64::max));
    }
    if src.is_hilbert() && tgt.is_hilbert() {
        return Ok(linalg::spectral_norm(a));
    }
    match src.dim() {
        1 => Ok(tgt.norm_of(a.column(0).as_slice())),
        2 => Ok(grid_2d(t)),
        3 => Ok(grid_3d(t)),
        _ => Err(Error::Unsupported(format!(
            "no oracle for source dimension {} with these norms",
            src.dim()
        ))),
    }
}

fn ratio(t: &DenseOperator, x: &DVector<f64>) -> f64 {
    let n = t.source().norm_of(x.as_slice());
    if n == 0.0 {
        return 0.0;
    }
    t.target().norm_of((t.entries() * x).as_slice()) / n
}

/// All vectors with entries in `{-1, 0, 1}`: the vertices of every polyhedral
/// unit ball in the supported families.
fn sign_vectors(d: usize) -> impl Iterator<Item = DVector<f64>> {
    (0..3usize.pow(d as u32)).map(move |mut code| {
        DVector::from_fn(d, |_, _| {
            let v = (code % 3) as f64 - 1.0;
            code /= 3;
            v
        })
    })
}

fn grid_2d(t: &DenseOperator) -> f64 {
    let f = |theta: f64| ratio(t, &DVector::from_vec(vec![theta.cos(), theta.sin()]));
    let h = PI / GRID_POINTS as f64;
    let vals: Vec<f64> = (0..GRID_POINTS).map(|i| f(i as f64 * h)).collect();
    let mut best = sign_vectors(2).map(|x| ratio(t, &x)).fold(0.0, f64::max);
    for &i in &top_indices(&vals, 16) {
        let c = i as f64 * h;
        best = best.max(golden_max(&f, c - h, c + h));
    }
    best
}

fn sphere(theta: f64, phi: f64) -> DVector<f64> {
    DVector::from_vec(vec![theta.sin() * phi.cos(), theta.sin() * phi.sin(), theta.cos()])
}

fn grid_3d(t: &DenseOperator) -> f64 {
    let (nt, np) = (200, GRID_POINTS / 200);
    let (ht, hp) = (0.5 * PI / (nt - 1) as f64, 2.0 * PI / np as f64);
    let f = |v: &[f64; 2]| ratio(t, &sphere(v[0], v[1]));
    let pts: Vec<[f64; 2]> = (0..nt)
        .flat_map(|i| (0..np).map(move |j| [i as f64 * ht, j as f64 * hp]))
        .collect();
    let vals: Vec<f64> = pts.iter().map(f).collect();
    let mut best = sign_vectors(3).map(|x| ratio(t, &x)).fold(0.0, f64::max);
    for &i in &top_indices(&vals, 32) {
        let mut x = pts[i];
        let mut step = [ht, hp];
        for _ in 0..3 {
            let (xm, v) = nelder_mead(&f, x, step);
            best = best.max(v);
            x = xm;
            step = [ht * 0.1, hp * 0.1];
        }
    }
    best
}

fn top_indices(vals: &[f64], count: usize) -> Vec<usize> {
    let mut idx: Vec<usize> = (0..vals.len()).collect();
    idx.sort_by(|&a, &b| vals[b].total_cmp(&vals[a]));
    idx.truncate(count);
    idx
}

fn golden_max<F: Fn(f64) -> f64>(f: &F, mut lo: f64, mut hi: f64) -> f64 {
    let r = (5f64.sqrt() - 1.0) / 2.0;
    let mut a = hi - r * (hi - lo);
    let mut b = lo + r * (hi - lo);
    let (mut fa, mut fb) = (f(a), f(b));
    let mut best = fa.max(fb);
    while hi - lo > 1e-14 {
        if fa >= fb {
            hi = b;
            b = a;
            fb = fa;
            a = hi - r * (hi - lo);
            fa = f(a);
        } else {
            lo = a;
            a = b;
            fa = fb;
            b = lo + r * (hi - lo);
            fb = f(b);
        }
        best = best.max(fa).max(fb);
    }
    best
}

/// Two-parameter Nelder–Mead maximization.
fn nelder_mead<F: Fn(&[f64; 2]) -> f64>(f: &F, x0: [f64; 2], step: [f64; 2]) -> ([f64; 2], f64) {
    let mut s = [x0, [x0[0] + step[0], x0[1]], [x0[0], x0[1] + step[1]]];
    let mut v = s.map(|p| f(&p));
    for _ in 0..4000 {
        let mut order = [0, 1, 2];
        order.sort_by(|&a, &b| v[b].total_cmp(&v[a]));
        let (bi, mi, wi) = (order[0], order[1], order[2]);
        let spread = (s[bi][0] - s[wi][0]).abs().max((s[bi][1] - s[wi][1]).abs());
        if spread < 1e-13 {
            break;
        }
        let c = [(s[bi][0] + s[mi][0]) / 2.0, (s[bi][1] + s[mi][1]) / 2.0];
        let at = |k: f64| [c[0] + k * (s[wi][0] - c[0]), c[1] + k * (s[wi][1] - c[1])];
        let xr = at(-1.0);
        let vr = f(&xr);
        if vr > v[bi] {
            let xe = at(-2.0);
            let ve = f(&xe);
            (s[wi], v[wi]) = if ve > vr { (xe, ve) } else { (xr, vr) };
        } else if vr > v[mi] {
            (s[wi], v[wi]) = (xr, vr);
        } else {
            let xc = at(0.5);
            let vc = f(&xc);
            if vc > v[wi] {
                (s[wi], v[wi]) = (xc, vc);
            } else {
                for k in [mi, wi] {
                    s[k] = [(s[k][0] + s[bi][0]) / 2.0, (s[k][1] + s[bi][1]) / 2.0];
                    v[k] = f(&s[k]);
                }
            }
        }
    }
    let bi = (0..3).max_by(|&a, &b| v[a].total_cmp(&v[b])).unwrap_or(0);
    (s[bi], v[bi])
}
