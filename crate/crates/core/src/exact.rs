//! Exact dyadic accumulator for certificate arithmetic.
//!
//! Every finite `f64` is `mant * 2^exp` exactly, so sums and products of cell
//! values stay representable as a big-integer mantissa with a binary exponent.
//! Set-measure certificates (sparsity, corona stopping inequalities) compare
//! such accumulators with no rounding at all.

use num::bigint::BigInt;
use num::{Signed, Zero};
use std::cmp::Ordering;

#[derive(Clone, Debug)]
pub struct Dyadic {
    mant: BigInt,
    exp: i64,
}

impl Dyadic {
    pub fn zero() -> Self {
        Dyadic { mant: BigInt::zero(), exp: 0 }
    }

    /// Exact decomposition of a finite f64. Panics on non-finite input; callers
    /// validate mesh values at construction time.
    pub fn from_f64(x: f64) -> Self {
        assert!(x.is_finite(), "non-finite value in exact accumulator");
        if x == 0.0 {
            return Dyadic::zero();
        }
        let bits = x.to_bits();
        let neg = (bits >> 63) == 1;
        let exp_bits = ((bits >> 52) & 0x7ff) as i64;
        let frac = (bits & ((1u64 << 52) - 1)) as i64;
        let (m, e) = if exp_bits == 0 {
            (frac, -1074i64)
        } else {
            (frac | (1i64 << 52), exp_bits - 1075)
        };
        let mant = BigInt::from(if neg { -m } else { m });
        Dyadic { mant, exp: e }
    }

    pub fn is_zero(&self) -> bool {
        self.mant.is_zero()
    }

    pub fn is_positive(&self) -> bool {
        self.mant.is_positive()
    }

    pub fn add_assign(&mut self, other: &Dyadic) {
        if other.mant.is_zero() {
            return;
        }
        if self.mant.is_zero() {
            self.mant = other.mant.clone();
            self.exp = other.exp;
            return;
        }
        match self.exp.cmp(&other.exp) {
            Ordering::Equal => self.mant += &other.mant,
            Ordering::Greater => {
                let shift = (self.exp - other.exp) as u64;
                self.mant = (&self.mant << shift) + &other.mant;
                self.exp = other.exp;
            }
            Ordering::Less => {
                let shift = (other.exp - self.exp) as u64;
                self.mant += &other.mant << shift;
            }
        }
    }

    /// self * 2^k
    pub fn mul_pow2(&self, k: i64) -> Dyadic {
        if self.mant.is_zero() {
            return Dyadic::zero();
        }
        Dyadic { mant: self.mant.clone(), exp: self.exp + k }
    }

    pub fn mul(&self, other: &Dyadic) -> Dyadic {
        if self.mant.is_zero() || other.mant.is_zero() {
            return Dyadic::zero();
        }
        Dyadic { mant: &self.mant * &other.mant, exp: self.exp + other.exp }
    }

    pub fn mul_int(&self, k: i64) -> Dyadic {
        if k == 0 || self.mant.is_zero() {
            return Dyadic::zero();
        }
        Dyadic { mant: &self.mant * BigInt::from(k), exp: self.exp }
    }

    pub fn cmp(&self, other: &Dyadic) -> Ordering {
        // Compare mant_a * 2^(ea - e) vs mant_b * 2^(eb - e) at e = min(ea, eb).
        if self.mant.is_zero() || other.mant.is_zero() {
            return self.mant.cmp(&other.mant);
        }
        match self.mant.sign().cmp(&other.mant.sign()) {
            Ordering::Equal => {}
            ord => return ord,
        }
        let e = self.exp.min(other.exp);
        let a = &self.mant << (self.exp - e) as u64;
        let b = &other.mant << (other.exp - e) as u64;
        a.cmp(&b)
    }

    /// Decompose into `(mantissa, exponent)` with value `mant * 2^exp`.
    pub fn into_parts(self) -> (BigInt, i64) {
        (self.mant, self.exp)
    }

    pub fn to_f64(&self) -> f64 {
        if self.mant.is_zero() {
            return 0.0;
        }
        // Round the big mantissa to 64 significant bits, then scale.
        let bits = self.mant.bits() as i64;
        let (m, e) = if bits > 63 {
            let shift = bits - 63;
            let m: BigInt = &self.mant >> shift as u64;
            (m, self.exp + shift)
        } else {
            (self.mant.clone(), self.exp)
        };
        let m_i64: i64 = m.try_into().expect("mantissa fits after truncation");
        (m_i64 as f64) * (2f64).powi(e as i32)
    }
}

/// Exact comparison `a/b >= c/d * num/den` for positive denominators, used for
/// stopping-time thresholds. Zero denominators follow the 0-average convention:
/// a zero denominator makes the ratio 0.
pub fn ratio_gt(a: &Dyadic, b: &Dyadic, c: &Dyadic, d: &Dyadic, factor_num: i64) -> bool {
    // a/b > factor * c/d  (b, d > 0)  <=>  a*d > factor * c * b
    if b.is_zero() {
        return false; // left ratio is 0 by convention
    }
    if d.is_zero() {
        // right ratio is 0: left must be strictly positive
        return a.is_positive();
    }
    let lhs = a.mul(d);
    let rhs = c.mul(b).mul_int(factor_num);
    lhs.cmp(&rhs) == Ordering::Greater
}

/// Exact check `x >= y / 2` — the sparsity / corona certificate bound.
pub fn at_least_half(x: &Dyadic, y: &Dyadic) -> bool {
    x.mul_pow2(1).cmp(y) != Ordering::Less
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn add_and_compare() {
        let mut s = Dyadic::zero();
        s.add_assign(&Dyadic::from_f64(0.1));
        s.add_assign(&Dyadic::from_f64(0.2));
        let t = Dyadic::from_f64(0.3);
        // 0.1 + 0.2 != 0.3 in binary; the exact accumulator sees the difference.
        assert_ne!(s.cmp(&t), Ordering::Equal);
        assert!((s.to_f64() - 0.3).abs() < 1e-15);
    }

    #[test]
    fn products_are_exact() {
        let a = Dyadic::from_f64(1.5);
        let b = Dyadic::from_f64(2.25);
        assert_eq!(a.mul(&b).to_f64(), 3.375);
    }

    #[test]
    fn half_certificate() {
        let x = Dyadic::from_f64(0.5);
        let y = Dyadic::from_f64(1.0);
        assert!(at_least_half(&x, &y));
        let x2 = Dyadic::from_f64(0.49999999999999994);
        assert!(!at_least_half(&x2, &y));
    }

    #[test]
    fn ratio_threshold_strictness() {
        let one = Dyadic::from_f64(1.0);
        let two = Dyadic::from_f64(2.0);
        let four = Dyadic::from_f64(4.0);
        // 2/1 > 2 * 1/1 is false (strict), 4/1 > 2 * 1/1 is true.
        assert!(!ratio_gt(&two, &one, &one, &one, 2));
        assert!(ratio_gt(&four, &one, &one, &one, 2));
    }
}
