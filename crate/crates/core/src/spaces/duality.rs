use nalgebra::DVector;
use serde::{Deserialize, Serialize};

use super::norm::{lp_norm, NormKind, NormSpec, Scalar};

/// How to pick a member of a set-valued duality map.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum TieBreak {
    /// Flat `ℓ^∞`-type faces: all mass on the lowest-index maximal component.
    #[default]
    LowestIndex,
    /// Flat `ℓ^∞`-type faces: mass split evenly over every maximal component.
    ZeroFill,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DualityConfig {
    pub tie_break: TieBreak,
    /// Relative tolerance deciding which components count as maximal or zero.
    pub tol: f64,
}

impl Default for DualityConfig {
    fn default() -> Self {
        Self {
            tie_break: TieBreak::LowestIndex,
            tol: 1e-9,
        }
    }
}

/// Select `f` with `‖f‖_* = 1` and `f(x) = ‖x‖`; `None` for `x = 0`.
///
/// Every branch is a closed form. Components of `ℓ¹` type whose magnitude is
/// below `tol·‖x‖/d` are treated as zero and get zero weight; on `ℓ^∞` type
/// faces the tie-break picks among components within `tol` of the maximum.
pub(crate) fn select<S: Scalar>(
    space: &NormSpec,
    x: &[S],
    cfg: &DualityConfig,
) -> Option<DVector<S>> {
    let d = x.len();
    let total = space.norm_of(x);
    if total == 0.0 || !total.is_finite() {
        return None;
    }
    let mut f = DVector::<S>::zeros(d);
    match space.kind() {
        NormKind::Lp { p, .. } if p == 1.0 => {
            let thr = cfg.tol * total / d as f64;
            for (fi, xi) in f.iter_mut().zip(x) {
                if xi.modulus() > thr {
                    *fi = xi.unit_sign().conjugate();
                }
            }
        }
        NormKind::Lp { p, .. } if p.is_infinite() => {
            let picks: Vec<usize> = (0..d)
                .filter(|&i| x[i].modulus() >= (1.0 - cfg.tol) * total)
                .collect();
            spread_sup(&mut f, x, &picks, None, cfg.tie_break);
        }
        NormKind::Lp { p, .. } if p == 2.0 => {
            for (fi, xi) in f.iter_mut().zip(x) {
                *fi = xi.conjugate().unscale(total);
            }
        }
        NormKind::Lp { p, .. } => {
            for (fi, xi) in f.iter_mut().zip(x) {
                let r = xi.modulus() / total;
                *fi = xi.unit_sign().conjugate().scale(r.powf(p - 1.0));
            }
        }
        NormKind::MixedK1 { k } => {
            let thr = cfg.tol * total / d as f64;
            for i in 0..k {
                if x[i].modulus() > thr {
                    f[i] = x[i].unit_sign().conjugate();
                }
            }
            let tail = lp_norm(&x[k..], 2.0);
            if tail > thr {
                for i in k..d {
                    f[i] = x[i].conjugate().unscale(tail);
                }
            }
        }
        NormKind::MixedKinf { k } => {
            let head: Vec<usize> = (0..k)
                .filter(|&i| x[i].modulus() >= (1.0 - cfg.tol) * total)
                .collect();
            let tail = lp_norm(&x[k..], 2.0);
            let tail_block = (tail >= (1.0 - cfg.tol) * total).then_some((k, tail));
            spread_sup(&mut f, x, &head, tail_block, cfg.tie_break);
        }
    }
    Some(f)
}

/// Distribute unit mass over the maximal components of a sup-type norm.
/// `tail_block` is `(start, ‖tail‖₂)` when the `ℓ²` tail is one of them.
fn spread_sup<S: Scalar>(
    f: &mut DVector<S>,
    x: &[S],
    coords: &[usize],
    tail_block: Option<(usize, f64)>,
    tie: TieBreak,
) {
    let count = coords.len() + usize::from(tail_block.is_some());
    debug_assert!(count > 0);
    let (coords, tail_block, weight) = match tie {
        TieBreak::LowestIndex => match coords.first() {
            Some(_) => (&coords[..1], None, 1.0),
            None => (coords, tail_block, 1.0),
        },
        TieBreak::ZeroFill => (coords, tail_block, 1.0 / count as f64),
    };
    for &i in coords {
        f[i] = x[i].unit_sign().conjugate().scale(weight);
    }
    if let Some((start, tnorm)) = tail_block {
        for i in start..x.len() {
            f[i] = x[i].conjugate().scale(weight / tnorm);
        }
    }
}
