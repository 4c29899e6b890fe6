//! Exact rational helpers shared by the model and the ILP core.

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{FromPrimitive, One, Signed, ToPrimitive, Zero};
use serde::{Deserialize, Deserializer, Serialize, Serializer};
use std::fmt;
use std::str::FromStr;

/// Arbitrary-precision rational used for multipliers, debts and all
/// exact objective arithmetic.
pub type Rational = BigRational;

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
#[error("malformed rational {0:?}, expected \"p/q\" or an integer")]
pub struct ParseRationalError(pub String);

/// Parses `"p/q"`, `"p"` or a plain decimal such as `"0.5"`.
pub fn parse_rational(text: &str) -> Result<Rational, ParseRationalError> {
    let err = || ParseRationalError(text.to_string());
    let s = text.trim();
    if let Some((num, den)) = s.split_once('/') {
        let num = BigInt::from_str(num.trim()).map_err(|_| err())?;
        let den = BigInt::from_str(den.trim()).map_err(|_| err())?;
        if den.is_zero() {
            return Err(err());
        }
        return Ok(Rational::new(num, den));
    }
    if let Ok(int) = BigInt::from_str(s) {
        return Ok(Rational::from_integer(int));
    }
    // decimal literal, parsed digit-exact rather than through f64
    let (neg, body) = match s.strip_prefix('-') {
        Some(rest) => (true, rest),
        None => (false, s),
    };
    let (int_part, frac_part) = body.split_once('.').ok_or_else(err)?;
    if int_part.is_empty() && frac_part.is_empty() {
        return Err(err());
    }
    if !int_part
        .chars()
        .chain(frac_part.chars())
        .all(|c| c.is_ascii_digit())
    {
        return Err(err());
    }
    let digits = format!("{int_part}{frac_part}");
    let num = BigInt::from_str(&digits).map_err(|_| err())?;
    let den = num_traits::pow(BigInt::from(10u32), frac_part.len());
    let value = Rational::new(num, den);
    Ok(if neg { -value } else { value })
}

/// Canonical `"p/q"` rendering (always with a denominator).
pub fn format_rational(value: &Rational) -> String {
    format!("{}/{}", value.numer(), value.denom())
}

/// Exact conversion of a finite float. Returns `None` for NaN or infinities.
pub fn from_f64(value: f64) -> Option<Rational> {
    if value == 0.0 {
        return Some(Rational::zero());
    }
    Rational::from_f64(value)
}

pub fn to_f64(value: &Rational) -> f64 {
    value.to_f64().unwrap_or_else(|| {
        if value.is_negative() {
            f64::NEG_INFINITY
        } else {
            f64::INFINITY
        }
    })
}

pub fn int(value: i64) -> Rational {
    Rational::from_integer(BigInt::from(value))
}

pub fn ratio(num: i64, den: i64) -> Rational {
    Rational::new(BigInt::from(num), BigInt::from(den))
}

/// Largest rational `g` such that every input is an integer multiple of `g`.
/// Zero entries are ignored; returns `None` when all inputs are zero.
pub fn rational_gcd<'a>(values: impl IntoIterator<Item = &'a Rational>) -> Option<Rational> {
    use num_integer::Integer;
    let mut acc: Option<Rational> = None;
    for v in values {
        if v.is_zero() {
            continue;
        }
        let v = v.abs();
        acc = Some(match acc {
            None => v,
            Some(g) => {
                // gcd(a/b, c/d) = gcd(a*d, c*b) / (b*d)
                let num = (g.numer() * v.denom()).gcd(&(v.numer() * g.denom()));
                Rational::new(num, g.denom() * v.denom())
            }
        });
    }
    acc
}

/// Serde adapter writing rationals as `"p/q"` strings.
pub mod serde_pq {
    use super::*;

    pub fn serialize<S: Serializer>(value: &Rational, s: S) -> Result<S::Ok, S::Error> {
        format_rational(value).serialize(s)
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<Rational, D::Error> {
        #[derive(Deserialize)]
        #[serde(untagged)]
        enum Raw {
            Text(String),
            Int(i64),
        }
        match Raw::deserialize(d)? {
            Raw::Text(t) => parse_rational(&t).map_err(serde::de::Error::custom),
            Raw::Int(i) => Ok(int(i)),
        }
    }
}

/// Display wrapper that prints integers without a denominator.
pub struct Pretty<'a>(pub &'a Rational);

impl fmt::Display for Pretty<'_> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.0.denom().is_one() {
            write!(f, "{}", self.0.numer())
        } else {
            write!(f, "{}/{}", self.0.numer(), self.0.denom())
        }
    }
}
