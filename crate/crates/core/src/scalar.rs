//! Scalar backends: exact rationals and binary64 floats behind one trait.

use std::fmt;
use std::str::FromStr;

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{FromPrimitive, One, Signed, ToPrimitive, Zero};

use crate::error::{Error, Result};

/// Exact rational scalar.
pub type Rational = BigRational;

/// Real scalars of the function space.
///
/// Implemented for [`Rational`] (exact, closed under the field operations)
/// and `f64` (carries the transcendental functions). Comparisons that need
/// a tolerance take it explicitly; the exact backend ignores it.
pub trait Scalar:
    Clone + fmt::Debug + fmt::Display + PartialOrd + Signed + FromPrimitive + Send + Sync + 'static
{
    /// `true` for the rational backend.
    const EXACT: bool;
    /// Short backend name used in reports.
    const BACKEND: &'static str;

    fn from_rational(r: &Rational) -> Self;

    fn to_f64(&self) -> f64;

    /// `e^{-x}`, or `None` when the backend cannot represent it.
    fn exp_neg(&self) -> Option<Self>;

    /// Exact zero test on the rational backend, `|x| <= eps` on floats.
    fn is_negligible(&self, eps: f64) -> bool;

    fn approx_eq(&self, other: &Self, eps: f64) -> bool {
        (self.clone() - other.clone()).is_negligible(eps)
    }

    /// Nearest integer when `self` is an integer (within `eps` on floats).
    fn as_integer(&self, eps: f64) -> Option<i64>;

    /// Exact rendering (`p/q`) for rationals, shortest round-trip for floats.
    fn render(&self) -> String {
        self.to_string()
    }

    fn from_usize(n: usize) -> Self {
        <Self as FromPrimitive>::from_usize(n).expect("usize fits every backend")
    }

    fn max_of(a: &Self, b: &Self) -> Self {
        if a >= b {
            a.clone()
        } else {
            b.clone()
        }
    }

    fn min_of(a: &Self, b: &Self) -> Self {
        if a <= b {
            a.clone()
        } else {
            b.clone()
        }
    }
}

impl Scalar for Rational {
    const EXACT: bool = true;
    const BACKEND: &'static str = "rational";

    fn from_rational(r: &Rational) -> Self {
        r.clone()
    }

    fn to_f64(&self) -> f64 {
        ToPrimitive::to_f64(self).unwrap_or(f64::NAN)
    }

    fn exp_neg(&self) -> Option<Self> {
        if self.is_zero() {
            Some(Rational::one())
        } else {
            None
        }
    }

    fn is_negligible(&self, _eps: f64) -> bool {
        self.is_zero()
    }

    fn as_integer(&self, _eps: f64) -> Option<i64> {
        if self.is_integer() {
            self.to_integer().to_i64()
        } else {
            None
        }
    }
}

impl Scalar for f64 {
    const EXACT: bool = false;
    const BACKEND: &'static str = "float";

    fn from_rational(r: &Rational) -> Self {
        ToPrimitive::to_f64(r).unwrap_or(f64::NAN)
    }

    fn to_f64(&self) -> f64 {
        *self
    }

    fn exp_neg(&self) -> Option<Self> {
        Some((-self).exp())
    }

    fn is_negligible(&self, eps: f64) -> bool {
        self.abs() <= eps
    }

    fn as_integer(&self, eps: f64) -> Option<i64> {
        let r = self.round();
        if (self - r).abs() <= eps && r.is_finite() {
            Some(r as i64)
        } else {
            None
        }
    }

    fn render(&self) -> String {
        format!("{self}")
    }
}

/// Parses `"p/q"`, `"p"`, or a finite decimal such as `"0.125"` exactly.
pub fn parse_rational(text: &str) -> Result<Rational> {
    let s = text.trim();
    let bad = || Error::Parse(format!("not a rational number: {text:?}"));
    if let Some((num, den)) = s.split_once('/') {
        let n = BigInt::from_str(num.trim()).map_err(|_| bad())?;
        let d = BigInt::from_str(den.trim()).map_err(|_| bad())?;
        if d.is_zero() {
            return Err(Error::Parse(format!("zero denominator in {text:?}")));
        }
        return Ok(Rational::new(n, d));
    }
    if let Some((int, frac)) = s.split_once('.') {
        if frac.is_empty() || !frac.bytes().all(|b| b.is_ascii_digit()) {
            return Err(bad());
        }
        let negative = int.starts_with('-');
        let int_part = if int.is_empty() || int == "-" || int == "+" {
            BigInt::zero()
        } else {
            BigInt::from_str(int).map_err(|_| bad())?.abs()
        };
        let scale = BigInt::from(10u8).pow(frac.len() as u32);
        let frac_part = BigInt::from_str(frac).map_err(|_| bad())?;
        let mut r = Rational::new(int_part * &scale + frac_part, scale);
        if negative {
            r = -r;
        }
        return Ok(r);
    }
    BigInt::from_str(s).map(Rational::from_integer).map_err(|_| bad())
}

/// Shorthand for `num/den` as an exact rational.
pub fn ratio(num: i64, den: i64) -> Rational {
    Rational::new(BigInt::from(num), BigInt::from(den))
}
