//! Scalar fields for operator entries.
//!
//! Two modes are supported: exact rationals for algebraic identities and
//! 64-bit floats for spectral work. Conversion only goes rational → float.
//! All scalars are real, so the involution on entries is the identity and
//! the adjoint of an operator is its transpose.

use std::fmt::{self, Debug, Display};
use std::ops::{Add, Mul, Neg, Sub};

use num::{BigInt, BigRational, One, ToPrimitive, Zero};
use serde::{Deserialize, Serialize};

/// Exact rational scalar.
pub type Rational = BigRational;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ScalarMode {
    Rational,
    Float,
}

impl Display for ScalarMode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ScalarMode::Rational => f.write_str("rational"),
            ScalarMode::Float => f.write_str("float"),
        }
    }
}

pub trait Scalar:
    Clone
    + Debug
    + PartialEq
    + Zero
    + One
    + Add<Output = Self>
    + Sub<Output = Self>
    + Mul<Output = Self>
    + Neg<Output = Self>
    + Send
    + Sync
{
    const MODE: ScalarMode;

    /// Tolerance used by membership tests when the caller does not pass one.
    const DEFAULT_TOL: f64;

    fn from_rational(r: &Rational) -> Self;

    fn as_f64(&self) -> f64;

    /// Complex conjugation; the identity for real scalars.
    fn conj(&self) -> Self {
        self.clone()
    }

    /// Equality up to `tol`, relative to the larger magnitude (floored at 1).
    /// Exact scalars ignore `tol`.
    fn approx_eq(&self, other: &Self, tol: f64) -> bool;

    /// Text form that parses back to the same value.
    fn to_text(&self) -> String;

    fn from_i64(v: i64) -> Self {
        Self::from_rational(&Rational::from_integer(BigInt::from(v)))
    }
}

impl Scalar for Rational {
    const MODE: ScalarMode = ScalarMode::Rational;
    const DEFAULT_TOL: f64 = 0.0;

    fn from_rational(r: &Rational) -> Self {
        r.clone()
    }

    fn as_f64(&self) -> f64 {
        ratio_to_f64(self)
    }

    fn approx_eq(&self, other: &Self, _tol: f64) -> bool {
        self == other
    }

    fn to_text(&self) -> String {
        format_rational(self)
    }
}

impl Scalar for f64 {
    const MODE: ScalarMode = ScalarMode::Float;
    const DEFAULT_TOL: f64 = 1e-12;

    fn from_rational(r: &Rational) -> Self {
        ratio_to_f64(r)
    }

    fn as_f64(&self) -> f64 {
        *self
    }

    fn approx_eq(&self, other: &Self, tol: f64) -> bool {
        let scale = self.abs().max(other.abs()).max(1.0);
        (self - other).abs() <= tol * scale
    }

    fn to_text(&self) -> String {
        format!("{self:?}")
    }
}

/// Rational → nearest-ish `f64`, robust to numerators and denominators that
/// overflow `f64` on their own.
pub fn ratio_to_f64(r: &Rational) -> f64 {
    if let Some(v) = r.to_f64() {
        if v.is_finite() {
            return v;
        }
    }
    // Scale both parts down to a representable range.
    let numer = r.numer();
    let denom = r.denom();
    let shift = numer.bits().max(denom.bits()).saturating_sub(1000);
    let n = (numer >> shift).to_f64().unwrap_or(0.0);
    let d = (denom >> shift).to_f64().unwrap_or(f64::INFINITY);
    n / d
}

pub fn rational(numer: i64, denom: i64) -> Rational {
    Rational::new(BigInt::from(numer), BigInt::from(denom))
}

/// Parse `a`, `a/b` or a decimal such as `0.25` into an exact rational.
pub fn parse_rational(text: &str) -> Option<Rational> {
    let text = text.trim();
    if let Some((n, d)) = text.split_once('/') {
        let n: BigInt = n.trim().parse().ok()?;
        let d: BigInt = d.trim().parse().ok()?;
        if d.is_zero() {
            return None;
        }
        return Some(Rational::new(n, d));
    }
    if let Some((int_part, frac_part)) = text.split_once('.') {
        if frac_part.is_empty() || !frac_part.bytes().all(|b| b.is_ascii_digit()) {
            return None;
        }
        let negative = int_part.starts_with('-');
        let int_digits = int_part.trim_start_matches(['-', '+']);
        if !int_digits.bytes().all(|b| b.is_ascii_digit()) {
            return None;
        }
        let digits = format!("{int_digits}{frac_part}");
        let mut numer: BigInt = digits.parse().ok()?;
        if negative {
            numer = -numer;
        }
        let denom = num::pow(BigInt::from(10), frac_part.len());
        return Some(Rational::new(numer, denom));
    }
    let n: BigInt = text.parse().ok()?;
    Some(Rational::from_integer(n))
}

pub fn format_rational(r: &Rational) -> String {
    if r.is_integer() {
        r.numer().to_string()
    } else {
        format!("{}/{}", r.numer(), r.denom())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parses_rational_forms() {
        assert_eq!(parse_rational("3"), Some(rational(3, 1)));
        assert_eq!(parse_rational("3/6"), Some(rational(1, 2)));
        assert_eq!(parse_rational("0.25"), Some(rational(1, 4)));
        assert_eq!(parse_rational("-1.5"), Some(rational(-3, 2)));
        assert_eq!(parse_rational("1/0"), None);
        assert_eq!(parse_rational("abc"), None);
        assert_eq!(parse_rational("1."), None);
    }

    #[test]
    fn huge_ratio_converts() {
        let big = num::pow(BigInt::from(10), 400);
        let r = Rational::new(big.clone() * BigInt::from(3), big * BigInt::from(4));
        assert_eq!(ratio_to_f64(&r), 0.75);
    }

    #[test]
    fn float_approx_is_relative() {
        assert!(1e6_f64.approx_eq(&(1e6 + 1e-7), 1e-12));
        assert!(!1.0_f64.approx_eq(&1.001, 1e-12));
    }
}
