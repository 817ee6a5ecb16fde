use nalgebra::{ComplexField, DVector};
use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::error::{Error, Result};

/// Field of scalars: `f64` or `Complex<f64>`.
pub trait Scalar: ComplexField<RealField = f64> + Copy {
    /// `self / |self|`, or zero for zero.
    fn unit_sign(self) -> Self {
        let m = self.modulus();
        if m == 0.0 {
            Self::zero()
        } else {
            self.unscale(m)
        }
    }
}

impl<T: ComplexField<RealField = f64> + Copy> Scalar for T {}

/// Which norm family a [`NormSpec`] describes.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum NormKind {
    /// `ℓᵖ` with its conjugate exponent cached so that dualizing twice is exact.
    Lp { p: f64, q: f64 },
    /// `ℓ¹` on the first `k` coordinates plus `ℓ²` on the tail.
    MixedK1 { k: usize },
    /// `max(ℓ^∞` on the first `k` coordinates, `ℓ²` on the tail`)`.
    MixedKinf { k: usize },
}

/// A norm on `𝔽ᵈ`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NormSpec {
    kind: NormKind,
    d: usize,
}

fn conjugate_exponent(p: f64) -> f64 {
    if p == 1.0 {
        f64::INFINITY
    } else if p.is_infinite() {
        1.0
    } else {
        p / (p - 1.0)
    }
}

impl NormSpec {
    pub fn lp(p: f64, d: usize) -> Result<Self> {
        if p.is_nan() || p < 1.0 {
            return Err(Error::InvalidNorm(format!("exponent p = {p} must lie in [1, inf]")));
        }
        if d == 0 {
            return Err(Error::InvalidNorm("dimension must be positive".into()));
        }
        Ok(Self {
            kind: NormKind::Lp {
                p,
                q: conjugate_exponent(p),
            },
            d,
        })
    }

    pub fn mixed_k1(k: usize, d: usize) -> Result<Self> {
        Self::check_split(k, d)?;
        Ok(Self {
            kind: NormKind::MixedK1 { k },
            d,
        })
    }

    pub fn mixed_kinf(k: usize, d: usize) -> Result<Self> {
        Self::check_split(k, d)?;
        Ok(Self {
            kind: NormKind::MixedKinf { k },
            d,
        })
    }

    fn check_split(k: usize, d: usize) -> Result<()> {
        if k == 0 || k >= d {
            return Err(Error::InvalidNorm(format!(
                "split index k = {k} must satisfy 1 <= k < d = {d}"
            )));
        }
        Ok(())
    }

    pub fn kind(&self) -> NormKind {
        self.kind
    }

    pub fn dim(&self) -> usize {
        self.d
    }

    /// Same norm family in another dimension (split index kept).
    pub fn with_dim(&self, d: usize) -> Result<Self> {
        match self.kind {
            NormKind::Lp { p, .. } => Self::lp(p, d),
            NormKind::MixedK1 { k } => Self::mixed_k1(k, d),
            NormKind::MixedKinf { k } => Self::mixed_kinf(k, d),
        }
    }

    /// The norm of the dual space under the pairing `f(x) = Σ fᵢxᵢ`.
    pub fn dual(&self) -> Self {
        let kind = match self.kind {
            NormKind::Lp { p, q } => NormKind::Lp { p: q, q: p },
            NormKind::MixedK1 { k } => NormKind::MixedKinf { k },
            NormKind::MixedKinf { k } => NormKind::MixedK1 { k },
        };
        Self { kind, d: self.d }
    }

    pub fn is_hilbert(&self) -> bool {
        matches!(self.kind, NormKind::Lp { p, .. } if p == 2.0)
    }

    pub fn lp_exponent(&self) -> Option<f64> {
        match self.kind {
            NormKind::Lp { p, .. } => Some(p),
            _ => None,
        }
    }

    pub(crate) fn check_len(&self, len: usize) -> Result<()> {
        if len != self.d {
            return Err(Error::DimensionMismatch {
                expected: self.d,
                found: len,
            });
        }
        Ok(())
    }

    /// Norm of a coordinate slice of length `d`.
    pub fn norm_of<S: Scalar>(&self, v: &[S]) -> f64 {
        debug_assert_eq!(v.len(), self.d);
        match self.kind {
            NormKind::Lp { p, .. } => lp_norm(v, p),
            NormKind::MixedK1 { k } => lp_norm(&v[..k], 1.0) + lp_norm(&v[k..], 2.0),
            NormKind::MixedKinf { k } => lp_norm(&v[..k], f64::INFINITY).max(lp_norm(&v[k..], 2.0)),
        }
    }

    /// Norm of a functional, given in pairing coordinates, on this space.
    pub fn dual_norm_of<S: Scalar>(&self, f: &[S]) -> f64 {
        self.dual().norm_of(f)
    }

    /// Constants `(lo, hi)` with `lo·‖v‖₂ ≤ ‖v‖ ≤ hi·‖v‖₂`.
    pub fn l2_equivalence(&self) -> (f64, f64) {
        let d = self.d as f64;
        match self.kind {
            NormKind::Lp { p, .. } => {
                let e = 1.0 / p - 0.5;
                if e >= 0.0 {
                    (1.0, d.powf(e))
                } else {
                    (d.powf(e), 1.0)
                }
            }
            NormKind::MixedK1 { k } => (1.0, ((k + 1) as f64).sqrt()),
            NormKind::MixedKinf { k } => (1.0 / ((k + 1) as f64).sqrt(), 1.0),
        }
    }
}

/// Scale-safe `ℓᵖ` norm.
pub(crate) fn lp_norm<S: Scalar>(v: &[S], p: f64) -> f64 {
    let amax = v.iter().map(|x| x.modulus()).fold(0.0_f64, f64::max);
    if amax == 0.0 || p.is_infinite() {
        return amax;
    }
    if p == 1.0 {
        return v.iter().map(|x| x.modulus()).sum();
    }
    let s: f64 = v.iter().map(|x| (x.modulus() / amax).powf(p)).sum();
    if p == 2.0 {
        amax * s.sqrt()
    } else {
        amax * s.powf(1.0 / p)
    }
}

pub(crate) fn to_dvector<S: Scalar>(v: &[S]) -> DVector<S> {
    DVector::from_column_slice(v)
}

#[derive(Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
enum NormSpecRepr {
    Lp { p: Exponent, d: usize },
    MixedK1 { k: usize, d: usize },
    MixedKinf { k: usize, d: usize },
}

/// `p` in JSON: a number, or the string `"inf"` for `p = ∞`.
struct Exponent(f64);

impl Serialize for Exponent {
    fn serialize<Ser: Serializer>(&self, s: Ser) -> std::result::Result<Ser::Ok, Ser::Error> {
        if self.0.is_infinite() {
            s.serialize_str("inf")
        } else {
            s.serialize_f64(self.0)
        }
    }
}

impl<'de> Deserialize<'de> for Exponent {
    fn deserialize<De: Deserializer<'de>>(de: De) -> std::result::Result<Self, De::Error> {
        #[derive(Deserialize)]
        #[serde(untagged)]
        enum Raw {
            Num(f64),
            Text(String),
        }
        match Raw::deserialize(de)? {
            Raw::Num(p) => Ok(Exponent(p)),
            Raw::Text(t) => match t.to_ascii_lowercase().as_str() {
                "inf" | "infinity" | "+inf" => Ok(Exponent(f64::INFINITY)),
                other => other
                    .parse::<f64>()
                    .map(Exponent)
                    .map_err(|_| serde::de::Error::custom(format!("bad exponent {t:?}"))),
            },
        }
    }
}

impl Serialize for NormSpec {
    fn serialize<Ser: Serializer>(&self, s: Ser) -> std::result::Result<Ser::Ok, Ser::Error> {
        let repr = match self.kind {
            NormKind::Lp { p, .. } => NormSpecRepr::Lp {
                p: Exponent(p),
                d: self.d,
            },
            NormKind::MixedK1 { k } => NormSpecRepr::MixedK1 { k, d: self.d },
            NormKind::MixedKinf { k } => NormSpecRepr::MixedKinf { k, d: self.d },
        };
        repr.serialize(s)
    }
}

impl<'de> Deserialize<'de> for NormSpec {
    fn deserialize<De: Deserializer<'de>>(de: De) -> std::result::Result<Self, De::Error> {
        let spec = match NormSpecRepr::deserialize(de)? {
            NormSpecRepr::Lp { p, d } => NormSpec::lp(p.0, d),
            NormSpecRepr::MixedK1 { k, d } => NormSpec::mixed_k1(k, d),
            NormSpecRepr::MixedKinf { k, d } => NormSpec::mixed_kinf(k, d),
        };
        spec.map_err(serde::de::Error::custom)
    }
}
