//! Exact sign evaluation backing the geometric predicates.
//!
//! Every sign test in this crate reduces to the sign of a small polynomial in
//! the input coordinates. Signs are decided by a floating-point fast path with
//! a conservative forward error bound; when the bound cannot certify the sign
//! (or an intermediate under/overflows), evaluation falls back to [`Dyadic`]
//! arithmetic, which represents every finite `f64` exactly. The fallback is
//! plain and slow; it only runs on (near-)degenerate inputs.

use std::cmp::Ordering;
use std::ops::{Add, Mul, Neg, Sub};

use num_bigint::BigInt;
use num_traits::{Float, ToPrimitive, Zero};

/// Machine epsilon for the error bound: 2⁻⁵³ (half an ulp at 1.0).
const EPS: f64 = 1.110_223_024_625_156_5e-16;

/// Forward error bound coefficient for `(a1−a2)(b1−b2) + (c1−c2)(d1−d2)`
/// when the two addends have opposite signs. Same shape as the classic
/// orient2d "bound A": two products of single differences combined by one
/// addition, giving (3 + 16ε)ε times the sum of addend magnitudes.
const SUM2_ERRBOUND: f64 = (3.0 + 16.0 * EPS) * EPS;

/// Arbitrary-precision dyadic number `mant · 2^exp`.
///
/// Closed under +, −, × with no rounding, and every finite `f64` converts
/// exactly, so polynomial signs over doubles are decided without error.
/// No normalization is performed; comparisons align exponents directly.
#[derive(Clone, Debug)]
pub(crate) struct Dyadic {
    mant: BigInt,
    exp: i64,
}

impl Dyadic {
    pub(crate) fn from_f64(v: f64) -> Dyadic {
        debug_assert!(v.is_finite());
        if v == 0.0 {
            return Dyadic { mant: BigInt::zero(), exp: 0 };
        }
        let (mant, exp, sign) = Float::integer_decode(v);
        let mut m = BigInt::from(mant);
        if sign < 0 {
            m = -m;
        }
        Dyadic { mant: m, exp: exp as i64 }
    }

    pub(crate) fn zero() -> Dyadic {
        Dyadic { mant: BigInt::zero(), exp: 0 }
    }

    pub(crate) fn is_zero(&self) -> bool {
        self.mant.is_zero()
    }

    /// Sign as -1 / 0 / 1.
    pub(crate) fn signum(&self) -> i32 {
        match self.mant.sign() {
            num_bigint::Sign::Minus => -1,
            num_bigint::Sign::NoSign => 0,
            num_bigint::Sign::Plus => 1,
        }
    }

    /// Nearest-f64 approximation (for display; never used in comparisons).
    #[cfg(test)]
    pub(crate) fn to_f64(&self) -> f64 {
        if self.mant.is_zero() {
            return 0.0;
        }
        // Round the mantissa to ~80 bits first so the final scale is the only
        // lossy step even when the full mantissa exceeds f64 range.
        let drop = (self.mant.bits() as i64 - 80).max(0);
        let m = (&self.mant >> drop as u64).to_f64().unwrap_or(f64::NAN);
        scale_by_pow2(m, self.exp + drop)
    }

    fn aligned(&self, other: &Dyadic) -> (BigInt, BigInt) {
        let e = self.exp.min(other.exp);
        let a = &self.mant << (self.exp - e) as u64;
        let b = &other.mant << (other.exp - e) as u64;
        (a, b)
    }

    pub(crate) fn cmp(&self, other: &Dyadic) -> Ordering {
        let (sa, sb) = (self.signum(), other.signum());
        if sa != sb {
            return sa.cmp(&sb);
        }
        if sa == 0 {
            return Ordering::Equal;
        }
        let (a, b) = self.aligned(other);
        a.cmp(&b)
    }
}

impl Add for Dyadic {
    type Output = Dyadic;
    fn add(self, rhs: Dyadic) -> Dyadic {
        let e = self.exp.min(rhs.exp);
        let (a, b) = self.aligned(&rhs);
        Dyadic { mant: a + b, exp: e }
    }
}

impl Sub for Dyadic {
    type Output = Dyadic;
    fn sub(self, rhs: Dyadic) -> Dyadic {
        self + (-rhs)
    }
}

impl Mul for Dyadic {
    type Output = Dyadic;
    fn mul(self, rhs: Dyadic) -> Dyadic {
        Dyadic { mant: self.mant * rhs.mant, exp: self.exp + rhs.exp }
    }
}

impl Neg for Dyadic {
    type Output = Dyadic;
    fn neg(self) -> Dyadic {
        Dyadic { mant: -self.mant, exp: self.exp }
    }
}

/// Compare two non-negative-denominator fractions `an/ad` and `bn/bd`
/// (`ad, bd > 0`) exactly via cross-multiplication.
pub(crate) fn cmp_ratio(an: &Dyadic, ad: &Dyadic, bn: &Dyadic, bd: &Dyadic) -> Ordering {
    debug_assert!(ad.signum() > 0 && bd.signum() > 0);
    (an.clone() * bd.clone()).cmp(&(bn.clone() * ad.clone()))
}

/// Approximate `num/den` as f64 (`den != 0`), for display accessors.
pub(crate) fn ratio_to_f64(num: &Dyadic, den: &Dyadic) -> f64 {
    debug_assert!(!den.is_zero());
    if num.is_zero() {
        return 0.0;
    }
    // Widen the numerator so the integer quotient carries ~64 significant
    // bits, then undo the widening in the float scale.
    let shift = (den.mant.bits() as i64 + 64 - num.mant.bits() as i64).max(0);
    let q = (&num.mant << shift as u64) / &den.mant;
    let qf = q.to_f64().unwrap_or(f64::NAN);
    scale_by_pow2(qf, num.exp - den.exp - shift)
}

/// `m · 2^e` for |m| in roughly [1, 2^81], splitting the scale in two and
/// multiplying m first so intermediates stay in range whenever the result is
/// representable; saturates to 0 / ±∞ far outside it.
fn scale_by_pow2(m: f64, e: i64) -> f64 {
    let h = (e / 2).clamp(-1074, 1074) as i32;
    let rest = (e - h as i64).clamp(-2000, 2000) as i32;
    m * 2f64.powi(h) * 2f64.powi(rest)
}

#[allow(clippy::too_many_arguments)]
fn sum2_exact(a1: f64, a2: f64, b1: f64, b2: f64, c1: f64, c2: f64, d1: f64, d2: f64) -> i32 {
    let d = |x: f64, y: f64| Dyadic::from_f64(x) - Dyadic::from_f64(y);
    (d(a1, a2) * d(b1, b2) + d(c1, c2) * d(d1, d2)).signum()
}

/// Exact sign of `(a1−a2)·(b1−b2) + (c1−c2)·(d1−d2)` for finite inputs.
///
/// All three walk predicates (orientation, corner obtuseness, bisector side)
/// instantiate this shape with raw input coordinates, so their differences
/// and the fallback evaluation stay exact.
#[allow(clippy::too_many_arguments)]
pub(crate) fn sum2_sign(
    a1: f64,
    a2: f64,
    b1: f64,
    b2: f64,
    c1: f64,
    c2: f64,
    d1: f64,
    d2: f64,
) -> i32 {
    let da = a1 - a2;
    let db = b1 - b2;
    let dc = c1 - c2;
    let dd = d1 - d2;
    let l = da * db;
    let r = dc * dd;

    // The float model below assumes no under/overflow: a rounded product may
    // lie about its sign only by flushing to zero or saturating to infinity.
    let degraded = |prod: f64, x: f64, y: f64| {
        !prod.is_finite()
            || (prod == 0.0 && x != 0.0 && y != 0.0)
            || (prod != 0.0 && prod.abs() < f64::MIN_POSITIVE)
    };
    if degraded(l, da, db) || degraded(r, dc, dd) {
        return sum2_exact(a1, a2, b1, b2, c1, c2, d1, d2);
    }

    // Rounding preserves the sign of each addend, so like signs decide
    // immediately and a zero addend delegates to the other.
    if l > 0.0 {
        if r >= 0.0 {
            return 1;
        }
    } else if l < 0.0 {
        if r <= 0.0 {
            return -1;
        }
    } else {
        return if r > 0.0 {
            1
        } else if r < 0.0 {
            -1
        } else {
            0
        };
    }

    // Opposite signs: cancellation. Trust the float sum only outside the
    // accumulated rounding error.
    let s = l + r;
    let errbound = SUM2_ERRBOUND * (l.abs() + r.abs());
    if s >= errbound {
        return 1;
    }
    if -s >= errbound {
        return -1;
    }
    sum2_exact(a1, a2, b1, b2, c1, c2, d1, d2)
}
