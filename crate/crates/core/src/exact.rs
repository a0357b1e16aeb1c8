//! Small exact-rational helpers used wherever a level window must be decided
//! without floating-point ties.
//!
//! Real inputs (letter values, table entries, `alpha`, `delta`) are mapped to
//! the simplest fraction within `1e-12` relative distance whose denominator
//! does not exceed [`MAX_DENOMINATOR`]. Decimal inputs like `0.1` therefore
//! become `1/10`, and grid letters `i/(m-1)` are recovered exactly.

use std::cmp::Ordering;

use num_bigint::BigInt;
use num_traits::Signed;

use crate::error::{Error, Result};

pub const MAX_DENOMINATOR: i128 = 1_000_000_000_000;

/// A reduced fraction with positive denominator.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct Rational {
    pub num: i128,
    pub den: i128,
}

fn gcd(mut a: i128, mut b: i128) -> i128 {
    a = a.abs();
    b = b.abs();
    while b != 0 {
        let t = a % b;
        a = b;
        b = t;
    }
    a
}

pub fn lcm(a: i128, b: i128) -> i128 {
    if a == 0 || b == 0 {
        return 0;
    }
    (a / gcd(a, b)) * b
}

impl Rational {
    pub fn new(num: i128, den: i128) -> Self {
        assert!(den != 0, "zero denominator");
        let g = gcd(num, den).max(1);
        let sign = if den < 0 { -1 } else { 1 };
        Rational {
            num: sign * num / g,
            den: sign * den / g,
        }
    }

    pub fn integer(n: i128) -> Self {
        Rational { num: n, den: 1 }
    }

    pub fn to_f64(self) -> f64 {
        self.num as f64 / self.den as f64
    }

    /// Best rational approximation by continued fractions.
    pub fn from_f64(x: f64) -> Result<Self> {
        if !x.is_finite() {
            return Err(Error::domain(format!("cannot rationalize {x}")));
        }
        if x.abs() > 1e12 {
            return Err(Error::domain(format!("value {x} out of exact range")));
        }
        let tol = 1e-12 * x.abs();
        let negative = x < 0.0;
        let y = x.abs();

        // convergents h/k
        let (mut h0, mut h1) = (0i128, 1i128);
        let (mut k0, mut k1) = (1i128, 0i128);
        let mut r = y;
        let mut best = Rational::new(y.round() as i128, 1);
        for _ in 0..64 {
            let a = r.floor();
            let ai = a as i128;
            let h2 = ai * h1 + h0;
            let k2 = ai * k1 + k0;
            if k2 > MAX_DENOMINATOR {
                break;
            }
            best = Rational::new(h2, k2);
            if (best.to_f64() - y).abs() <= tol {
                break;
            }
            let frac = r - a;
            if frac < 1e-18 {
                break;
            }
            r = 1.0 / frac;
            h0 = h1;
            h1 = h2;
            k0 = k1;
            k1 = k2;
        }
        Ok(if negative {
            Rational::new(-best.num, best.den)
        } else {
            best
        })
    }

    pub fn add(self, o: Rational) -> Rational {
        Rational::new(self.num * o.den + o.num * self.den, self.den * o.den)
    }

    pub fn sub(self, o: Rational) -> Rational {
        Rational::new(self.num * o.den - o.num * self.den, self.den * o.den)
    }

    pub fn mul_int(self, k: i128) -> Rational {
        Rational::new(self.num * k, self.den)
    }

    pub fn abs(self) -> Rational {
        Rational {
            num: self.num.abs(),
            den: self.den,
        }
    }
}

impl PartialOrd for Rational {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl Ord for Rational {
    fn cmp(&self, other: &Self) -> Ordering {
        (self.num * other.den).cmp(&(other.num * self.den))
    }
}

/// Values brought to a common denominator: `value_i = nums[i] / den`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ScaledValues {
    pub nums: Vec<i128>,
    pub den: i128,
}

impl ScaledValues {
    pub fn from_f64s(values: &[f64]) -> Result<Self> {
        let rats = values
            .iter()
            .map(|&v| Rational::from_f64(v))
            .collect::<Result<Vec<_>>>()?;
        let den = rats.iter().fold(1i128, |acc, r| lcm(acc, r.den));
        if den > 1_000_000_000_000 {
            return Err(Error::domain(
                "table values have no common denominator below 1e12",
            ));
        }
        let nums = rats.iter().map(|r| r.num * (den / r.den)).collect();
        Ok(ScaledValues { nums, den })
    }
}

/// Exact test of `|sum/(den*n) - alpha| < delta` where `sum` is an integer
/// numerator over `den`.
pub fn window_contains(sum: i128, den: i128, n: usize, alpha: Rational, delta: Rational) -> bool {
    // |sum/(den n) - a/b| < c/d  <=>  |sum*b - a*den*n| * d < c*b*den*n
    let n = n as i128;
    let small = || -> Option<bool> {
        let dn = den.checked_mul(n)?;
        let lhs = sum
            .checked_mul(alpha.den)?
            .checked_sub(alpha.num.checked_mul(dn)?)?
            .checked_abs()?
            .checked_mul(delta.den)?;
        let rhs = delta.num.checked_mul(alpha.den)?.checked_mul(dn)?;
        Some(lhs < rhs)
    };
    small().unwrap_or_else(|| {
        let big = BigInt::from;
        let dn = big(den) * big(n);
        let lhs = (big(sum) * big(alpha.den) - big(alpha.num) * &dn).abs() * big(delta.den);
        lhs < big(delta.num) * big(alpha.den) * dn
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn recovers_decimal_fractions() {
        assert_eq!(Rational::from_f64(0.1).unwrap(), Rational::new(1, 10));
        assert_eq!(Rational::from_f64(0.05).unwrap(), Rational::new(1, 20));
        assert_eq!(Rational::from_f64(1.0 / 3.0).unwrap(), Rational::new(1, 3));
        assert_eq!(Rational::from_f64(-0.625).unwrap(), Rational::new(-5, 8));
        assert_eq!(Rational::from_f64(2.0).unwrap(), Rational::integer(2));
        assert_eq!(Rational::from_f64(0.0).unwrap(), Rational::integer(0));
        assert_eq!(Rational::from_f64(1e-9).unwrap(), Rational::new(1, 1_000_000_000));
    }

    #[test]
    fn boundary_is_excluded_exactly() {
        // 3/12 = 0.25 is exactly 0.05 away from 0.3: not strictly inside.
        let a = Rational::from_f64(0.3).unwrap();
        let d = Rational::from_f64(0.05).unwrap();
        assert!(!window_contains(3, 1, 12, a, d));
        assert!(window_contains(4, 1, 12, a, d));
        // overflowing products take the big-integer path
        let tiny = Rational::new(1, 1_000_000_000_000);
        let huge = i128::MAX / 4;
        assert!(!window_contains(huge, 1, 1, Rational::integer(0), tiny));
        // The float comparison gets this wrong.
        assert!((0.25f64 - 0.3).abs() < 0.05);
    }

    #[test]
    fn common_denominator() {
        let s = ScaledValues::from_f64s(&[0.0, 0.5, 1.0]).unwrap();
        assert_eq!(s.den, 2);
        assert_eq!(s.nums, vec![0, 1, 2]);
    }
}
