//! Numeric abstraction shared by the search, the certifier and the hardness checks.
//!
//! Everything that only needs field arithmetic and an ordering is written against
//! [`Scalar`], so the same code runs over `f32`/`f64` (fast search) and over
//! [`Rational`] (certification, exact grid checks).

use std::fmt;

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{FromPrimitive, Num, NumAssign, One, Signed, ToPrimitive, Zero};

/// Arbitrary-precision fraction, always kept in lowest terms with a positive denominator.
pub type Rational = BigRational;

pub trait Scalar:
    Num
    + NumAssign
    + Signed
    + Clone
    + PartialOrd
    + FromPrimitive
    + ToPrimitive
    + fmt::Debug
    + fmt::Display
    + Send
    + Sync
    + 'static
{
    /// True when arithmetic is exact (no rounding).
    const EXACT: bool;

    fn from_ratio(num: i64, den: i64) -> Self {
        Self::from_i64(num).expect("integer fits scalar") / Self::from_i64(den).expect("integer fits scalar")
    }

    fn of_u32(v: u32) -> Self {
        <Self as FromPrimitive>::from_u32(v).expect("integer fits scalar")
    }

    /// Lossy conversion used for reporting and convergence tests.
    fn approx(&self) -> f64 {
        self.to_f64().unwrap_or(f64::NAN)
    }

    /// Whether `self` beats `current` by more than rounding noise. Exact types
    /// compare strictly; floats need a margin of a few dozen ulps, or repeated
    /// rounding would record phantom improvements (and cycles of them).
    fn improves_on(&self, current: &Self) -> bool {
        self > current
    }

    fn max_of(self, other: Self) -> Self {
        if other > self {
            other
        } else {
            self
        }
    }

    fn min_of(self, other: Self) -> Self {
        if other < self {
            other
        } else {
            self
        }
    }
}

impl Scalar for f32 {
    const EXACT: bool = false;

    fn improves_on(&self, current: &Self) -> bool {
        *self - *current > current.abs() * 64.0 * f32::EPSILON
    }
}

impl Scalar for f64 {
    const EXACT: bool = false;

    fn improves_on(&self, current: &Self) -> bool {
        *self - *current > current.abs() * 64.0 * f64::EPSILON
    }
}

impl Scalar for Rational {
    const EXACT: bool = true;

    fn from_ratio(num: i64, den: i64) -> Self {
        Rational::new(BigInt::from(num), BigInt::from(den))
    }
}

/// Builds `num/den` as an exact rational.
pub fn ratio(num: i64, den: i64) -> Rational {
    Rational::new(BigInt::from(num), BigInt::from(den))
}

pub fn rational_from_int(v: i64) -> Rational {
    Rational::from_integer(BigInt::from(v))
}

/// Renders a rational as `p/q` (or `p` for integers).
pub fn rational_string(r: &Rational) -> String {
    if r.denom().is_one() {
        r.numer().to_string()
    } else {
        format!("{}/{}", r.numer(), r.denom())
    }
}

/// Parses `p/q`, `p`, or a finite decimal such as `0.25` into an exact rational.
pub fn parse_rational(text: &str) -> Option<Rational> {
    let text = text.trim();
    if let Some((num, den)) = text.split_once('/') {
        let num: BigInt = num.trim().parse().ok()?;
        let den: BigInt = den.trim().parse().ok()?;
        if den.is_zero() {
            return None;
        }
        return Some(Rational::new(num, den));
    }
    if let Some((int, frac)) = text.split_once('.') {
        let negative = int.starts_with('-');
        let digits = format!("{}{}", int.trim_start_matches(['-', '+']), frac);
        if digits.is_empty() || !digits.bytes().all(|b| b.is_ascii_digit()) {
            return None;
        }
        let num: BigInt = digits.parse().ok()?;
        let den = num_traits::pow(BigInt::from(10u32), frac.len());
        let r = Rational::new(num, den);
        return Some(if negative { -r } else { r });
    }
    let int: BigInt = text.parse().ok()?;
    Some(Rational::from_integer(int))
}

/// Exact rational value of a finite double.
pub fn rational_from_f64(v: f64) -> Option<Rational> {
    Rational::from_float(v)
}

/// Decimal rendering with `digits` significant digits, used where a human-readable
/// companion to an exact value is wanted.
pub fn decimal_string(r: &Rational, digits: usize) -> String {
    let v = r.to_f64().unwrap_or(f64::NAN);
    if v == 0.0 {
        return "0".to_string();
    }
    let magnitude = v.abs().log10().floor() as i32;
    let decimals = (digits as i32 - 1 - magnitude).max(0) as usize;
    let s = format!("{:.*}", decimals, v);
    if s.contains('.') {
        s.trim_end_matches('0').trim_end_matches('.').to_string()
    } else {
        s
    }
}

pub fn is_nonnegative<S: Scalar>(v: &S) -> bool {
    !v.is_negative()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parses_fractions_and_decimals() {
        assert_eq!(parse_rational("449/1344"), Some(ratio(449, 1344)));
        assert_eq!(parse_rational("0.25"), Some(ratio(1, 4)));
        assert_eq!(parse_rational("-1.5"), Some(ratio(-3, 2)));
        assert_eq!(parse_rational("7"), Some(ratio(7, 1)));
        assert_eq!(parse_rational("1/0"), None);
        assert_eq!(parse_rational("x"), None);
    }

    #[test]
    fn renders_reduced_form() {
        assert_eq!(rational_string(&ratio(6, -4)), "-3/2");
        assert_eq!(rational_string(&ratio(8, 4)), "2");
        assert_eq!(decimal_string(&ratio(449, 28), 12), "16.0357142857");
    }

    #[test]
    fn generic_constructors_agree() {
        assert_eq!(<f64 as Scalar>::from_ratio(1, 4), 0.25);
        assert_eq!(<Rational as Scalar>::from_ratio(2, 8), ratio(1, 4));
        assert!(<Rational as Scalar>::EXACT && !<f64 as Scalar>::EXACT);
    }
}
