//! Scalar types carried on graph edges.
//!
//! Every max-plus routine is generic over [`Weight`] so the same code runs in
//! double precision (fast path, tolerance-based zero tests) and in exact
//! rational arithmetic (reference path, exact zero tests). The exact path is
//! what feeds the extended-precision transfer operator: a normalized weight
//! that should be `0` must be exactly `0` there, otherwise `P(beta)` drifts by
//! `beta * err` and swamps the residual.

use std::fmt;

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{Signed, ToPrimitive, Zero};

/// Exact rational number used for user-supplied potential values.
pub type Rational = BigRational;

pub trait Weight: Clone + PartialEq + PartialOrd + fmt::Debug + fmt::Display + Send + Sync + 'static {
    /// `true` when arithmetic is exact and tolerances are ignored.
    const EXACT: bool;

    fn zero() -> Self;
    fn from_rational(value: &Rational) -> Self;
    fn add(&self, rhs: &Self) -> Self;
    fn sub(&self, rhs: &Self) -> Self;
    /// Divide by a positive count (cycle lengths).
    fn div_count(&self, count: usize) -> Self;
    fn to_f64(&self) -> f64;

    /// `|self - other| <= tol` (exact equality for exact types).
    fn near(&self, other: &Self, tol: f64) -> bool;

    /// `self <= other + tol` (plain `<=` for exact types).
    fn le_tol(&self, other: &Self, tol: f64) -> bool;

    fn from_i64(value: i64) -> Self {
        Self::from_rational(&Rational::from_integer(BigInt::from(value)))
    }

    fn is_zero_tol(&self, tol: f64) -> bool {
        self.near(&Self::zero(), tol)
    }
}

impl Weight for f64 {
    const EXACT: bool = false;

    fn zero() -> Self {
        0.0
    }

    fn from_rational(value: &Rational) -> Self {
        ToPrimitive::to_f64(value).unwrap_or(f64::NAN)
    }

    fn add(&self, rhs: &Self) -> Self {
        self + rhs
    }

    fn sub(&self, rhs: &Self) -> Self {
        self - rhs
    }

    fn div_count(&self, count: usize) -> Self {
        self / count as f64
    }

    fn to_f64(&self) -> f64 {
        *self
    }

    fn near(&self, other: &Self, tol: f64) -> bool {
        (self - other).abs() <= tol
    }

    fn le_tol(&self, other: &Self, tol: f64) -> bool {
        *self <= other + tol
    }
}

impl Weight for Rational {
    const EXACT: bool = true;

    fn zero() -> Self {
        Zero::zero()
    }

    fn from_rational(value: &Rational) -> Self {
        value.clone()
    }

    fn add(&self, rhs: &Self) -> Self {
        self + rhs
    }

    fn sub(&self, rhs: &Self) -> Self {
        self - rhs
    }

    fn div_count(&self, count: usize) -> Self {
        self / Rational::from_integer(BigInt::from(count))
    }

    fn to_f64(&self) -> f64 {
        ToPrimitive::to_f64(self).unwrap_or(f64::NAN)
    }

    fn near(&self, other: &Self, _tol: f64) -> bool {
        self == other
    }

    fn le_tol(&self, other: &Self, _tol: f64) -> bool {
        self <= other
    }
}

/// Parse `"p/q"`, `"-3"`, or a decimal such as `"-0.125"` / `"1.5e-3"` into an
/// exact rational.
pub fn parse_rational(text: &str) -> Option<Rational> {
    let text = text.trim().replace('\u{2212}', "-");
    if let Some((num, den)) = text.split_once('/') {
        let num: BigInt = num.trim().parse().ok()?;
        let den: BigInt = den.trim().parse().ok()?;
        if den.is_zero() {
            return None;
        }
        return Some(Rational::new(num, den));
    }
    parse_decimal(&text)
}

fn parse_decimal(text: &str) -> Option<Rational> {
    let (mantissa, exponent) = match text.find(['e', 'E']) {
        Some(pos) => (&text[..pos], text[pos + 1..].parse::<i32>().ok()?),
        None => (text, 0),
    };
    let (negative, digits) = match mantissa.strip_prefix('-') {
        Some(rest) => (true, rest),
        None => (false, mantissa.strip_prefix('+').unwrap_or(mantissa)),
    };
    let (int_part, frac_part) = digits.split_once('.').unwrap_or((digits, ""));
    if int_part.is_empty() && frac_part.is_empty() {
        return None;
    }
    if !int_part.chars().chain(frac_part.chars()).all(|c| c.is_ascii_digit()) {
        return None;
    }
    let all_digits = format!("{int_part}{frac_part}");
    let mut value = Rational::from_integer(all_digits.parse::<BigInt>().ok()?);
    let scale = exponent - frac_part.len() as i32;
    let ten = Rational::from_integer(BigInt::from(10));
    if scale >= 0 {
        value *= num_traits::pow(ten, scale as usize);
    } else {
        value /= num_traits::pow(ten, (-scale) as usize);
    }
    Some(if negative { -value } else { value })
}

/// Render a rational as an integer when possible, `p/q` otherwise.
pub fn format_rational(value: &Rational) -> String {
    if value.is_integer() {
        value.numer().to_string()
    } else {
        format!("{}/{}", value.numer(), value.denom())
    }
}

/// Largest absolute value, as a double.
pub fn max_abs(values: &[Rational]) -> f64 {
    values.iter().map(|v| Weight::to_f64(&v.abs())).fold(0.0, f64::max)
}
