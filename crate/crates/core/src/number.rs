//! Exact rational numbers with a cached float view, and the scalar
//! abstraction that lets exact evaluators run in either `f64` or rational
//! arithmetic.

use std::fmt;
use std::ops::{Add, Div, Mul, Sub};
use std::str::FromStr;

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, Signed, ToPrimitive, Zero};
use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::error::{Error, Result};

/// A rational quantity (probability, weight, cost) kept exactly, with its
/// nearest `f64` cached.
#[derive(Clone)]
pub struct Number {
    exact: BigRational,
    approx: f64,
}

impl PartialEq for Number {
    fn eq(&self, other: &Self) -> bool {
        self.exact == other.exact
    }
}

impl Eq for Number {}

impl PartialOrd for Number {
    fn partial_cmp(&self, other: &Self) -> Option<std::cmp::Ordering> {
        Some(self.cmp(other))
    }
}

impl Ord for Number {
    fn cmp(&self, other: &Self) -> std::cmp::Ordering {
        self.exact.cmp(&other.exact)
    }
}

impl std::hash::Hash for Number {
    fn hash<H: std::hash::Hasher>(&self, state: &mut H) {
        self.exact.hash(state)
    }
}

impl Number {
    pub fn new(exact: BigRational) -> Self {
        let approx = ToPrimitive::to_f64(&exact).unwrap_or(f64::NAN);
        Number { exact, approx }
    }

    pub fn ratio(num: i64, den: i64) -> Self {
        assert!(den != 0, "zero denominator");
        Number::new(BigRational::new(BigInt::from(num), BigInt::from(den)))
    }

    pub fn integer(n: i64) -> Self {
        Number::new(BigRational::from_integer(BigInt::from(n)))
    }

    pub fn zero() -> Self {
        Number::new(BigRational::zero())
    }

    pub fn one() -> Self {
        Number::new(BigRational::one())
    }

    /// Exact binary value of a finite float.
    pub fn from_f64(x: f64) -> Result<Self> {
        BigRational::from_float(x)
            .map(Number::new)
            .ok_or_else(|| Error::InvalidNumber(x.to_string()))
    }

    pub fn exact(&self) -> &BigRational {
        &self.exact
    }

    pub fn to_f64(&self) -> f64 {
        self.approx
    }

    pub fn is_zero(&self) -> bool {
        self.exact.is_zero()
    }

    pub fn is_negative(&self) -> bool {
        self.exact.is_negative()
    }

    pub fn pow(&self, exp: u32) -> Self {
        Number::new(num_traits::pow(self.exact.clone(), exp as usize))
    }

    pub fn complement(&self) -> Self {
        Number::new(BigRational::one() - &self.exact)
    }
}

impl Add for &Number {
    type Output = Number;
    fn add(self, rhs: &Number) -> Number {
        Number::new(&self.exact + &rhs.exact)
    }
}

impl Sub for &Number {
    type Output = Number;
    fn sub(self, rhs: &Number) -> Number {
        Number::new(&self.exact - &rhs.exact)
    }
}

impl Mul for &Number {
    type Output = Number;
    fn mul(self, rhs: &Number) -> Number {
        Number::new(&self.exact * &rhs.exact)
    }
}

impl fmt::Display for Number {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.exact.is_integer() {
            write!(f, "{}", self.exact.numer())
        } else {
            write!(f, "{}/{}", self.exact.numer(), self.exact.denom())
        }
    }
}

impl fmt::Debug for Number {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{self}")
    }
}

impl FromStr for Number {
    type Err = Error;

    /// Accepts `p/q`, integers, and decimals with an optional exponent
    /// (`0.25`, `1e-3`). Decimals are converted exactly.
    fn from_str(s: &str) -> Result<Self> {
        let bad = || Error::InvalidNumber(s.to_string());
        let t = s.trim();
        if t.is_empty() {
            return Err(bad());
        }
        if let Some((n, d)) = t.split_once('/') {
            let n = BigInt::from_str(n.trim()).map_err(|_| bad())?;
            let d = BigInt::from_str(d.trim()).map_err(|_| bad())?;
            if d.is_zero() {
                return Err(bad());
            }
            return Ok(Number::new(BigRational::new(n, d)));
        }
        let (mantissa, exponent) = match t.find(['e', 'E']) {
            Some(i) => (&t[..i], t[i + 1..].parse::<i32>().map_err(|_| bad())?),
            None => (t, 0),
        };
        let (negative, mantissa) = match mantissa.strip_prefix('-') {
            Some(rest) => (true, rest),
            None => (false, mantissa.strip_prefix('+').unwrap_or(mantissa)),
        };
        let (int_part, frac_part) = mantissa.split_once('.').unwrap_or((mantissa, ""));
        if int_part.is_empty() && frac_part.is_empty() {
            return Err(bad());
        }
        if !int_part.chars().chain(frac_part.chars()).all(|c| c.is_ascii_digit()) {
            return Err(bad());
        }
        let digits = format!("{int_part}{frac_part}");
        let mut value = BigRational::from_integer(BigInt::from_str(&digits).map_err(|_| bad())?);
        let scale = exponent - frac_part.len() as i32;
        let ten = BigRational::from_integer(BigInt::from(10));
        if scale >= 0 {
            value *= num_traits::pow(ten, scale as usize);
        } else {
            value /= num_traits::pow(ten, (-scale) as usize);
        }
        if negative {
            value = -value;
        }
        Ok(Number::new(value))
    }
}

impl Serialize for Number {
    fn serialize<S: Serializer>(&self, serializer: S) -> std::result::Result<S::Ok, S::Error> {
        serializer.serialize_str(&self.to_string())
    }
}

impl<'de> Deserialize<'de> for Number {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> std::result::Result<Self, D::Error> {
        #[derive(Deserialize)]
        #[serde(untagged)]
        enum Repr {
            Text(String),
            Int(i64),
            Float(f64),
        }
        let text = match Repr::deserialize(deserializer)? {
            Repr::Text(s) => s,
            Repr::Int(i) => i.to_string(),
            // shortest round-trip form keeps `0.1` as 1/10
            Repr::Float(x) => format!("{x:?}"),
        };
        text.parse().map_err(serde::de::Error::custom)
    }
}

/// Arithmetic used by the exact evaluators. Implemented for `f64` (fast,
/// approximate) and [`BigRational`] (exact).
pub trait Scalar:
    Clone
    + fmt::Debug
    + PartialOrd
    + Send
    + Sync
    + Zero
    + One
    + Add<Output = Self>
    + Sub<Output = Self>
    + Mul<Output = Self>
    + Div<Output = Self>
{
    fn from_number(n: &Number) -> Self;
    fn from_count(n: u64) -> Self;
    fn to_f64(&self) -> f64;
    /// Exact textual form, when this scalar is exact.
    fn exact_repr(&self) -> Option<String> {
        None
    }
}

impl Scalar for f64 {
    fn from_number(n: &Number) -> Self {
        n.approx
    }
    fn from_count(n: u64) -> Self {
        n as f64
    }
    fn to_f64(&self) -> f64 {
        *self
    }
}

impl Scalar for BigRational {
    fn from_number(n: &Number) -> Self {
        n.exact.clone()
    }
    fn from_count(n: u64) -> Self {
        BigRational::from_integer(BigInt::from(n))
    }
    fn to_f64(&self) -> f64 {
        ToPrimitive::to_f64(self).unwrap_or(f64::NAN)
    }
    fn exact_repr(&self) -> Option<String> {
        Some(Number::new(self.clone()).to_string())
    }
}
