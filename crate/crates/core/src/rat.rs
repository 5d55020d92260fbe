//! Exact rational scalar used for all cube geometry.
//!
//! Shifted-grid endpoints are thirds of dyadic numbers, so `f64` comparisons
//! would misclassify boundary containment. Every geometric predicate in the
//! crate goes through `Rat`.

use crate::error::{CoreError, Result};
use num::rational::Ratio;
use num::{One, Signed, Zero};

pub type Rat = Ratio<i128>;

pub fn rat(n: i128, d: i128) -> Rat {
    Ratio::new(n, d)
}

/// Exact conversion of a finite `f64` into a rational.
///
/// Fails for magnitudes (or denominators) outside the `i128` window; mesh
/// coordinates and levels used by the artifact stay far inside it.
pub fn rat_from_f64(x: f64) -> Result<Rat> {
    if !x.is_finite() {
        return Err(CoreError::NonFinite("rat_from_f64"));
    }
    if x == 0.0 {
        return Ok(Rat::zero());
    }
    let bits = x.to_bits();
    let neg = (bits >> 63) == 1;
    let exp_bits = ((bits >> 52) & 0x7ff) as i64;
    let frac = (bits & ((1u64 << 52) - 1)) as i128;
    let (mant, e) = if exp_bits == 0 {
        (frac, -1074i64)
    } else {
        (frac | (1i128 << 52), exp_bits - 1075)
    };
    // Strip trailing zeros to keep exponents small.
    let tz = mant.trailing_zeros() as i64;
    let mant = mant >> tz;
    let e = e + tz;
    if !(-120..=70).contains(&e) {
        return Err(CoreError::OutOfWindow(format!(
            "f64 {x} has binary exponent {e} outside the exact window"
        )));
    }
    let r = if e >= 0 {
        Rat::from_integer(mant << e)
    } else {
        rat(mant, 1i128 << (-e))
    };
    Ok(if neg { -r } else { r })
}

/// 2^k as an exact rational; |k| capped to keep i128 arithmetic headroom.
pub fn pow2(k: i32) -> Result<Rat> {
    if !(-100..=100).contains(&k) {
        return Err(CoreError::OutOfWindow(format!("level {k} outside ±100")));
    }
    Ok(if k >= 0 {
        Rat::from_integer(1i128 << k)
    } else {
        rat(1, 1i128 << (-k))
    })
}

pub fn floor(r: Rat) -> i128 {
    r.floor().to_integer()
}

pub fn to_f64(r: Rat) -> f64 {
    // i128 -> f64 is lossy only beyond 2^53; split to keep precision for the
    // magnitudes we actually produce.
    (*r.numer() as f64) / (*r.denom() as f64)
}

pub fn abs(r: Rat) -> Rat {
    r.abs()
}

pub fn is_one(r: Rat) -> bool {
    r.is_one()
}
