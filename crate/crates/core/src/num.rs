//! Scalar values: exact rationals, with an approximate fallback.
//!
//! Every value parsed from input is exact. Operations between exact values
//! stay exact; the only sources of approximate values are irrational square
//! roots and logarithms, or an explicit request for floating-point mode.

use std::cmp::Ordering;
use std::fmt;
use std::ops::{Add, Div, Mul, Neg, Sub};
use std::str::FromStr;

use num_bigint::BigInt;
use num_integer::Integer;
use num_rational::BigRational;
use num_traits::{One, Signed, ToPrimitive, Zero};
use serde::de::{self, Visitor};
use serde::{Deserialize, Deserializer, Serialize, Serializer};
use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
#[error("cannot read `{text}` as an exact rational: {reason}")]
pub struct ParseNumError {
    pub text: String,
    pub reason: &'static str,
}

/// A real number, exact when possible.
#[derive(Clone, Debug)]
pub enum Num {
    Exact(BigRational),
    Approx(f64),
}

impl Num {
    pub fn zero() -> Self {
        Num::Exact(BigRational::zero())
    }

    pub fn one() -> Self {
        Num::Exact(BigRational::one())
    }

    pub fn int(v: i64) -> Self {
        Num::Exact(BigRational::from_integer(BigInt::from(v)))
    }

    /// `numer / denom`; panics on a zero denominator.
    pub fn ratio(numer: i64, denom: i64) -> Self {
        assert!(denom != 0, "zero denominator");
        Num::Exact(BigRational::new(BigInt::from(numer), BigInt::from(denom)))
    }

    /// `2^-k`.
    pub fn pow2_neg(k: u32) -> Self {
        Num::Exact(BigRational::new(BigInt::one(), BigInt::one() << k))
    }

    pub fn from_f64(v: f64) -> Self {
        Num::Approx(v)
    }

    pub fn is_exact(&self) -> bool {
        matches!(self, Num::Exact(_))
    }

    pub fn as_rational(&self) -> Option<&BigRational> {
        match self {
            Num::Exact(r) => Some(r),
            Num::Approx(_) => None,
        }
    }

    pub fn to_f64(&self) -> f64 {
        match self {
            Num::Exact(r) => rational_to_f64(r),
            Num::Approx(v) => *v,
        }
    }

    /// The rational closest to an approximate value (exactly its binary
    /// expansion); exact values are returned unchanged.
    pub fn to_exact(&self) -> Num {
        match self {
            Num::Exact(_) => self.clone(),
            Num::Approx(v) => {
                Num::Exact(BigRational::from_float(*v).unwrap_or_else(BigRational::zero))
            }
        }
    }

    pub fn rational(&self) -> BigRational {
        match self.to_exact() {
            Num::Exact(r) => r,
            Num::Approx(_) => unreachable!(),
        }
    }

    /// The same value with exactness dropped.
    pub fn approximate(&self) -> Self {
        Num::Approx(self.to_f64())
    }

    pub fn is_zero(&self) -> bool {
        match self {
            Num::Exact(r) => r.is_zero(),
            Num::Approx(v) => *v == 0.0,
        }
    }

    pub fn signum(&self) -> i8 {
        match self {
            Num::Exact(r) => {
                if r.is_positive() {
                    1
                } else if r.is_negative() {
                    -1
                } else {
                    0
                }
            }
            Num::Approx(v) => {
                if *v > 0.0 {
                    1
                } else if *v < 0.0 {
                    -1
                } else {
                    0
                }
            }
        }
    }

    pub fn is_positive(&self) -> bool {
        self.signum() > 0
    }

    pub fn is_negative(&self) -> bool {
        self.signum() < 0
    }

    pub fn abs(&self) -> Self {
        match self {
            Num::Exact(r) => Num::Exact(r.abs()),
            Num::Approx(v) => Num::Approx(v.abs()),
        }
    }

    pub fn recip(&self) -> Option<Self> {
        Num::one().checked_div(self)
    }

    pub fn checked_div(&self, other: &Num) -> Option<Self> {
        if other.is_zero() {
            return None;
        }
        Some(match (self, other) {
            (Num::Exact(a), Num::Exact(b)) => Num::Exact(a / b),
            _ => Num::Approx(self.to_f64() / other.to_f64()),
        })
    }

    pub fn pow(&self, mut exp: u64) -> Self {
        let mut base = self.clone();
        let mut acc = Num::one();
        while exp > 0 {
            if exp & 1 == 1 {
                acc = &acc * &base;
            }
            exp >>= 1;
            if exp > 0 {
                base = &base * &base;
            }
        }
        acc
    }

    /// Square root of a nonnegative value; exact when numerator and
    /// denominator are both perfect squares.
    pub fn sqrt(&self) -> Option<Self> {
        if self.is_negative() {
            return None;
        }
        match self {
            Num::Exact(r) => {
                let (n, d) = (r.numer(), r.denom());
                let (sn, sd) = (n.sqrt(), d.sqrt());
                if &(&sn * &sn) == n && &(&sd * &sd) == d {
                    Some(Num::Exact(BigRational::new(sn, sd)))
                } else {
                    Some(Num::Approx(rational_to_f64(r).sqrt()))
                }
            }
            Num::Approx(v) => Some(Num::Approx(v.sqrt())),
        }
    }

    pub fn min(self, other: Num) -> Num {
        if other < self {
            other
        } else {
            self
        }
    }

    pub fn max(self, other: Num) -> Num {
        if other > self {
            other
        } else {
            self
        }
    }

    /// Total order used for sorting; approximate NaNs never arise here.
    pub fn total_cmp(&self, other: &Num) -> Ordering {
        self.partial_cmp(other).unwrap_or(Ordering::Equal)
    }

    /// Equality up to `tol` relative to the magnitudes involved; exact
    /// equality when both sides are exact.
    pub fn close_to(&self, other: &Num, tol: f64) -> bool {
        match (self, other) {
            (Num::Exact(a), Num::Exact(b)) => a == b,
            _ => {
                let (a, b) = (self.to_f64(), other.to_f64());
                (a - b).abs() <= tol * (1.0 + a.abs().max(b.abs()))
            }
        }
    }

    /// Decimal rendering: exact digits when the expansion terminates,
    /// otherwise the nearest double.
    pub fn to_decimal_string(&self) -> String {
        match self {
            Num::Exact(r) => {
                terminating_decimal(r).unwrap_or_else(|| format!("{}", rational_to_f64(r)))
            }
            Num::Approx(v) => format!("{v}"),
        }
    }

    /// Smallest integer `n >= 0` with `2^-n <= self`, for positive values.
    pub fn neg_log2_ceil(&self) -> Option<u32> {
        if !self.is_positive() {
            return None;
        }
        let mut n = 0u32;
        while Num::pow2_neg(n) > *self {
            n += 1;
            if n > 4096 {
                return None;
            }
        }
        Some(n)
    }
}

fn rational_to_f64(r: &BigRational) -> f64 {
    match (r.numer().to_f64(), r.denom().to_f64()) {
        (Some(n), Some(d)) if n.is_finite() && d.is_finite() => n / d,
        _ => {
            // Shift both parts down to a representable range.
            let bits = r.numer().bits().max(r.denom().bits()) as i64 - 900;
            let shift = bits.max(0) as usize;
            let n = (r.numer() >> shift).to_f64().unwrap_or(0.0);
            let d = (r.denom() >> shift).to_f64().unwrap_or(f64::INFINITY);
            n / d
        }
    }
}

fn terminating_decimal(r: &BigRational) -> Option<String> {
    let mut d = r.denom().clone();
    let two = BigInt::from(2);
    let five = BigInt::from(5);
    let (mut twos, mut fives) = (0usize, 0usize);
    while d.is_even() {
        d /= &two;
        twos += 1;
    }
    while (&d % &five).is_zero() {
        d /= &five;
        fives += 1;
    }
    if !d.is_one() {
        return None;
    }
    let places = twos.max(fives);
    if places > 64 {
        return None;
    }
    let scale = num_traits::pow(BigInt::from(10), places);
    let scaled = (r * BigRational::from_integer(scale)).to_integer();
    let neg = scaled.is_negative();
    let digits = scaled.abs().to_string();
    let s = if places == 0 {
        digits
    } else {
        let padded = format!("{:0>width$}", digits, width = places + 1);
        let (int, frac) = padded.split_at(padded.len() - places);
        format!("{int}.{frac}")
    };
    Some(if neg { format!("-{s}") } else { s })
}

impl FromStr for Num {
    type Err = ParseNumError;

    fn from_str(text: &str) -> Result<Self, Self::Err> {
        let err = |reason| ParseNumError {
            text: text.to_string(),
            reason,
        };
        let t = text.trim();
        if t.is_empty() {
            return Err(err("empty"));
        }
        if let Some((n, d)) = t.split_once('/') {
            let n = parse_decimal(n.trim()).ok_or_else(|| err("bad numerator"))?;
            let d = parse_decimal(d.trim()).ok_or_else(|| err("bad denominator"))?;
            if d.is_zero() {
                return Err(err("zero denominator"));
            }
            return Ok(Num::Exact(n / d));
        }
        parse_decimal(t)
            .map(Num::Exact)
            .ok_or_else(|| err("not an integer, fraction, or finite decimal"))
    }
}

fn parse_decimal(t: &str) -> Option<BigRational> {
    let (neg, body) = match t.strip_prefix('-') {
        Some(rest) => (true, rest),
        None => (false, t.strip_prefix('+').unwrap_or(t)),
    };
    if body.is_empty() {
        return None;
    }
    let (int, frac) = body.split_once('.').unwrap_or((body, ""));
    if (int.is_empty() && frac.is_empty())
        || !int.chars().all(|c| c.is_ascii_digit())
        || !frac.chars().all(|c| c.is_ascii_digit())
    {
        return None;
    }
    let digits = format!("{int}{frac}");
    let n = BigInt::from_str(if digits.is_empty() { "0" } else { &digits }).ok()?;
    let d = num_traits::pow(BigInt::from(10), frac.len());
    let v = BigRational::new(n, d);
    Some(if neg { -v } else { v })
}

impl fmt::Display for Num {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Num::Exact(r) => {
                if r.denom().is_one() {
                    write!(f, "{}", r.numer())
                } else {
                    write!(f, "{}/{}", r.numer(), r.denom())
                }
            }
            Num::Approx(v) => write!(f, "~{v}"),
        }
    }
}

impl PartialEq for Num {
    fn eq(&self, other: &Self) -> bool {
        match (self, other) {
            (Num::Exact(a), Num::Exact(b)) => a == b,
            _ => self.to_f64() == other.to_f64(),
        }
    }
}

impl PartialOrd for Num {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        match (self, other) {
            (Num::Exact(a), Num::Exact(b)) => Some(a.cmp(b)),
            _ => self.to_f64().partial_cmp(&other.to_f64()),
        }
    }
}

macro_rules! binop {
    ($trait:ident, $method:ident, $op:tt) => {
        impl $trait<&Num> for &Num {
            type Output = Num;
            fn $method(self, rhs: &Num) -> Num {
                match (self, rhs) {
                    (Num::Exact(a), Num::Exact(b)) => Num::Exact(a $op b),
                    _ => Num::Approx(self.to_f64() $op rhs.to_f64()),
                }
            }
        }
        impl $trait<Num> for Num {
            type Output = Num;
            fn $method(self, rhs: Num) -> Num {
                &self $op &rhs
            }
        }
        impl $trait<&Num> for Num {
            type Output = Num;
            fn $method(self, rhs: &Num) -> Num {
                &self $op rhs
            }
        }
    };
}

binop!(Add, add, +);
binop!(Sub, sub, -);
binop!(Mul, mul, *);

impl Div<&Num> for &Num {
    type Output = Num;
    fn div(self, rhs: &Num) -> Num {
        self.checked_div(rhs).expect("division by zero")
    }
}

impl Div<Num> for Num {
    type Output = Num;
    fn div(self, rhs: Num) -> Num {
        &self / &rhs
    }
}

impl Neg for &Num {
    type Output = Num;
    fn neg(self) -> Num {
        match self {
            Num::Exact(r) => Num::Exact(-r),
            Num::Approx(v) => Num::Approx(-v),
        }
    }
}

impl Neg for Num {
    type Output = Num;
    fn neg(self) -> Num {
        -&self
    }
}

impl From<i64> for Num {
    fn from(v: i64) -> Self {
        Num::int(v)
    }
}

impl std::iter::Sum for Num {
    fn sum<I: Iterator<Item = Num>>(iter: I) -> Self {
        iter.fold(Num::zero(), |a, b| a + b)
    }
}

impl Serialize for Num {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        match self {
            Num::Exact(_) => s.serialize_str(&self.to_string()),
            Num::Approx(v) => s.serialize_f64(*v),
        }
    }
}

impl<'de> Deserialize<'de> for Num {
    fn deserialize<D: Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        struct NumVisitor;
        impl Visitor<'_> for NumVisitor {
            type Value = Num;
            fn expecting(&self, f: &mut fmt::Formatter) -> fmt::Result {
                f.write_str("an exact rational such as \"3/4\", \"0.125\", or an integer")
            }
            fn visit_str<E: de::Error>(self, v: &str) -> Result<Num, E> {
                v.parse().map_err(E::custom)
            }
            fn visit_i64<E: de::Error>(self, v: i64) -> Result<Num, E> {
                Ok(Num::int(v))
            }
            fn visit_u64<E: de::Error>(self, v: u64) -> Result<Num, E> {
                Ok(Num::Exact(BigRational::from_integer(BigInt::from(v))))
            }
            fn visit_f64<E: de::Error>(self, v: f64) -> Result<Num, E> {
                Err(E::custom(format!(
                    "floating-point literal {v} is ambiguous; quote it as a decimal or fraction string"
                )))
            }
        }
        d.deserialize_any(NumVisitor)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parses_fractions_and_decimals() {
        assert_eq!("3/4".parse::<Num>().unwrap(), Num::ratio(3, 4));
        assert_eq!("0.125".parse::<Num>().unwrap(), Num::ratio(1, 8));
        assert_eq!("-2".parse::<Num>().unwrap(), Num::int(-2));
        assert_eq!("-0.5/2".parse::<Num>().unwrap(), Num::ratio(-1, 4));
        assert!("1/0".parse::<Num>().is_err());
        assert!("abc".parse::<Num>().is_err());
        assert!(".".parse::<Num>().is_err());
    }

    #[test]
    fn renders_terminating_decimals_exactly() {
        assert_eq!(Num::ratio(9, 800).to_decimal_string(), "0.01125");
        assert_eq!(Num::ratio(-1, 2).to_decimal_string(), "-0.5");
        assert_eq!(Num::int(3).to_decimal_string(), "3");
        assert_eq!(Num::ratio(9, 800).to_string(), "9/800");
    }

    #[test]
    fn sqrt_is_exact_on_perfect_squares() {
        assert_eq!(Num::ratio(9, 16).sqrt().unwrap(), Num::ratio(3, 4));
        assert!(Num::ratio(9, 16).sqrt().unwrap().is_exact());
        assert!(!Num::int(2).sqrt().unwrap().is_exact());
        assert!(Num::int(-1).sqrt().is_none());
    }

    #[test]
    fn mixing_exact_and_approx_degrades() {
        let v = Num::ratio(1, 2) + Num::from_f64(0.25);
        assert!(!v.is_exact());
        assert_eq!(v.to_f64(), 0.75);
    }

    #[test]
    fn powers_and_logs() {
        assert_eq!(Num::ratio(1, 2).pow(10), Num::pow2_neg(10));
        assert_eq!(Num::ratio(3, 16).neg_log2_ceil(), Some(3));
        assert_eq!(Num::ratio(1, 4).neg_log2_ceil(), Some(2));
    }
}
