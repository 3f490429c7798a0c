//! Exact rational measures and interval arithmetic helpers.

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{Signed, ToPrimitive, Zero};
use serde::ser::SerializeStruct;
use serde::{Serialize, Serializer};

/// Build a rational from machine integers.
pub fn rat(num: i128, den: i128) -> BigRational {
    BigRational::new(BigInt::from(num), BigInt::from(den))
}

/// `count / den` for unsigned cell counts.
pub fn rat_u(num: u128, den: u128) -> BigRational {
    BigRational::new(BigInt::from(num), BigInt::from(den))
}

/// Lossy float view, for report columns that sit next to the exact value.
pub fn to_f64(r: &BigRational) -> f64 {
    r.to_f64().unwrap_or(f64::NAN)
}

/// Closed interval `[lo, hi]` of exact rationals.
///
/// Window measures come out as intervals: the `lo` endpoint counts cells
/// certified inside, the `hi` endpoint adds every frontier cell. A fully
/// decided window has `lo == hi`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct MeasureInterval {
    pub lo: BigRational,
    pub hi: BigRational,
}

impl MeasureInterval {
    pub fn new(lo: BigRational, hi: BigRational) -> Self {
        assert!(lo <= hi, "interval endpoints out of order");
        MeasureInterval { lo, hi }
    }

    pub fn point(v: BigRational) -> Self {
        MeasureInterval { lo: v.clone(), hi: v }
    }

    pub fn zero() -> Self {
        MeasureInterval::point(BigRational::zero())
    }

    pub fn is_point(&self) -> bool {
        self.lo == self.hi
    }

    pub fn width(&self) -> BigRational {
        &self.hi - &self.lo
    }

    pub fn contains(&self, v: &BigRational) -> bool {
        &self.lo <= v && v <= &self.hi
    }

    /// Distance from `v` to the interval (zero when inside).
    pub fn distance_to(&self, v: &BigRational) -> BigRational {
        if v < &self.lo {
            &self.lo - v
        } else if v > &self.hi {
            v - &self.hi
        } else {
            BigRational::zero()
        }
    }

    /// Interval-wise `<=`: both endpoints no larger.
    pub fn le(&self, other: &MeasureInterval) -> bool {
        self.lo <= other.lo && self.hi <= other.hi
    }

    /// `self` nested inside `other`.
    pub fn subset_of(&self, other: &MeasureInterval) -> bool {
        other.lo <= self.lo && self.hi <= other.hi
    }
}

impl Serialize for MeasureInterval {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        let mut st = s.serialize_struct("MeasureInterval", 2)?;
        st.serialize_field("lo", &RationalRepr::of(&self.lo))?;
        st.serialize_field("hi", &RationalRepr::of(&self.hi))?;
        st.end()
    }
}

/// Serialization form for exact rationals: numerator/denominator strings plus
/// a lossy decimal for human readers.
#[derive(Debug, Clone, Serialize)]
pub struct RationalRepr {
    pub num: String,
    pub den: String,
    pub decimal: f64,
}

impl RationalRepr {
    pub fn of(r: &BigRational) -> Self {
        RationalRepr {
            num: r.numer().to_string(),
            den: r.denom().to_string(),
            decimal: to_f64(r),
        }
    }
}

/// Parse "a/b" or "a" into an exact rational. Used by CLI flags and configs.
pub fn parse_rational(text: &str) -> Option<BigRational> {
    let text = text.trim();
    let (num, den) = match text.split_once('/') {
        Some((n, d)) => (n.trim(), d.trim()),
        None => (text, "1"),
    };
    let num: BigInt = num.parse().ok()?;
    let den: BigInt = den.parse().ok()?;
    if den.is_zero() {
        return None;
    }
    Some(BigRational::new(num, den))
}

/// Rational interval certain to contain a real value. Only the operations the
/// divergence-trend arithmetic needs: everything here keeps endpoints exact.
#[derive(Debug, Clone)]
pub struct RatInterval {
    pub lo: BigRational,
    pub hi: BigRational,
}

impl RatInterval {
    pub fn point(v: BigRational) -> Self {
        RatInterval { lo: v.clone(), hi: v }
    }

    pub fn new(lo: BigRational, hi: BigRational) -> Self {
        assert!(lo <= hi);
        RatInterval { lo, hi }
    }

    pub fn add(&self, other: &RatInterval) -> RatInterval {
        RatInterval { lo: &self.lo + &other.lo, hi: &self.hi + &other.hi }
    }

    pub fn add_exact(&self, v: &BigRational) -> RatInterval {
        RatInterval { lo: &self.lo + v, hi: &self.hi + v }
    }

    /// Division, requiring a strictly positive denominator interval.
    pub fn div(&self, other: &RatInterval) -> RatInterval {
        assert!(other.lo.is_positive(), "dividing by interval touching zero");
        assert!(!self.lo.is_negative(), "interval division restricted to nonnegative numerators");
        RatInterval { lo: &self.lo / &other.hi, hi: &self.hi / &other.lo }
    }

    /// Certified strict order: every value of `self` below every value of `other`.
    pub fn certainly_lt(&self, other: &RatInterval) -> bool {
        self.hi < other.lo
    }

    pub fn certainly_gt(&self, v: &BigRational) -> bool {
        &self.lo > v
    }
}

/// Certified bounds on log2(3), from comparing powers: if `2^a <= 3^k < 2^(a+1)`
/// then `a/k <= log2(3) <= (a+1)/k`.
pub fn log2_of_3_bounds(k: u32) -> RatInterval {
    use num_bigint::BigUint;
    let pow3 = BigUint::from(3u32).pow(k);
    let a = pow3.bits() - 1; // floor(log2(3^k))
    RatInterval::new(rat(a as i128, k as i128), rat(a as i128 + 1, k as i128))
}

/// Natural log of an exact rational, as f64. Split into numerator and
/// denominator logs so magnitudes far outside f64 range still work.
pub fn ln_rational(r: &BigRational) -> f64 {
    ln_bigint(r.numer()) - ln_bigint(r.denom())
}

fn ln_bigint(v: &BigInt) -> f64 {
    assert!(v.is_positive(), "log of nonpositive value");
    let bits = v.bits();
    if bits <= 52 {
        return (v.to_f64().unwrap()).ln();
    }
    // v = mantissa * 2^shift with mantissa in f64 range
    let shift = bits - 52;
    let mantissa = (v >> shift).to_f64().unwrap();
    mantissa.ln() + (shift as f64) * std::f64::consts::LN_2
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn interval_order_and_distance() {
        let i = MeasureInterval::new(rat(1, 3), rat(1, 2));
        assert!(i.contains(&rat(2, 5)));
        assert_eq!(i.distance_to(&rat(1, 4)), rat(1, 12));
        assert_eq!(i.distance_to(&rat(3, 4)), rat(1, 4));
        assert!(MeasureInterval::zero().le(&i));
    }

    #[test]
    fn log2_of_3_bracket_tightens() {
        let coarse = log2_of_3_bounds(12);
        let fine = log2_of_3_bounds(200);
        // 19/12 <= log2 3 <= 20/12
        assert_eq!(coarse.lo, rat(19, 12));
        assert_eq!(coarse.hi, rat(20, 12));
        // brackets at different precisions both trap the value, so they
        // overlap, and the finer one is narrower
        assert!(fine.lo < coarse.hi && coarse.lo < fine.hi);
        let width = &fine.hi - &fine.lo;
        assert_eq!(width, rat(1, 200));
        assert!(width < &coarse.hi - &coarse.lo);
    }

    #[test]
    fn ln_handles_huge_values() {
        let big = BigRational::from(BigInt::from(1u8) << 1000);
        let expected = 1000.0 * std::f64::consts::LN_2;
        assert!((ln_rational(&big) - expected).abs() < 1e-9);
    }

    #[test]
    fn rational_parsing() {
        assert_eq!(parse_rational("1/2"), Some(rat(1, 2)));
        assert_eq!(parse_rational("3"), Some(rat(3, 1)));
        assert_eq!(parse_rational("-7/4"), Some(rat(-7, 4)));
        assert_eq!(parse_rational("1/0"), None);
        assert_eq!(parse_rational("x"), None);
    }
}
