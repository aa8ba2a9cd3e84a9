//! Exact rationals and binary floats behind one interface.

use std::fmt;
use std::ops::{Add, Div, Mul, Neg, Sub};

use num::bigint::BigInt;
use num::rational::BigRational;
use num::{One, Signed, ToPrimitive, Zero};

use crate::error::{RcmError, Result};

/// Significand bits carried by approximate scalars.
pub const APPROX_PRECISION_BITS: u32 = f64::MANTISSA_DIGITS;

/// Arithmetic needed by the enumeration engines.
pub trait Field:
    Clone
    + fmt::Debug
    + PartialEq
    + PartialOrd
    + Send
    + Sync
    + 'static
    + Add<Output = Self>
    + Sub<Output = Self>
    + Mul<Output = Self>
    + Div<Output = Self>
    + Neg<Output = Self>
{
    fn zero() -> Self;
    fn one() -> Self;
    fn from_int(i: i64) -> Self;
    fn from_big(i: &BigInt) -> Self;
    fn is_zero(&self) -> bool;
    fn to_f64(&self) -> f64;
    fn abs(&self) -> Self;

    fn powi(&self, n: i64) -> Self {
        let mut base = if n < 0 { Self::one() / self.clone() } else { self.clone() };
        let mut e = n.unsigned_abs();
        let mut acc = Self::one();
        while e > 0 {
            if e & 1 == 1 {
                acc = acc * base.clone();
            }
            e >>= 1;
            if e > 0 {
                base = base.clone() * base;
            }
        }
        acc
    }
}

impl Field for BigRational {
    fn zero() -> Self {
        Zero::zero()
    }
    fn one() -> Self {
        One::one()
    }
    fn from_int(i: i64) -> Self {
        BigRational::from_integer(BigInt::from(i))
    }
    fn from_big(i: &BigInt) -> Self {
        BigRational::from_integer(i.clone())
    }
    fn is_zero(&self) -> bool {
        Zero::is_zero(self)
    }
    fn to_f64(&self) -> f64 {
        ToPrimitive::to_f64(self).unwrap_or_else(|| ln_rational(self).exp())
    }
    fn abs(&self) -> Self {
        Signed::abs(self)
    }
}

impl Field for f64 {
    fn zero() -> Self {
        0.0
    }
    fn one() -> Self {
        1.0
    }
    fn from_int(i: i64) -> Self {
        i as f64
    }
    fn from_big(i: &BigInt) -> Self {
        i.to_f64().unwrap_or(f64::INFINITY)
    }
    fn is_zero(&self) -> bool {
        *self == 0.0
    }
    fn to_f64(&self) -> f64 {
        *self
    }
    fn abs(&self) -> Self {
        f64::abs(*self)
    }
}

/// Fields that round-trip through [`Scalar`].
pub trait Repr: Field {
    fn from_scalar(s: &Scalar) -> Result<Self>;
    fn into_scalar(self) -> Scalar;
    fn from_f64_lossy(x: f64) -> Self;
}

impl Repr for BigRational {
    fn from_scalar(s: &Scalar) -> Result<Self> {
        match s {
            Scalar::Exact(r) => Ok(r.clone()),
            Scalar::Approx(_) => Err(RcmError::MixedMode),
        }
    }
    fn into_scalar(self) -> Scalar {
        Scalar::Exact(self)
    }
    fn from_f64_lossy(x: f64) -> Self {
        BigRational::from_float(x).unwrap_or_else(Zero::zero)
    }
}

impl Repr for f64 {
    fn from_scalar(s: &Scalar) -> Result<Self> {
        match s {
            Scalar::Approx(x) => Ok(*x),
            Scalar::Exact(_) => Err(RcmError::MixedMode),
        }
    }
    fn into_scalar(self) -> Scalar {
        Scalar::Approx(self)
    }
    fn from_f64_lossy(x: f64) -> Self {
        x
    }
}

fn ln_bigint(x: &BigInt) -> f64 {
    let bits = x.bits();
    if bits < 900 {
        return x.to_f64().unwrap().ln();
    }
    let shift = bits - 64;
    let top: BigInt = x >> shift;
    top.to_f64().unwrap().ln() + shift as f64 * std::f64::consts::LN_2
}

/// Natural log of a positive rational without overflowing through f64.
pub fn ln_rational(r: &BigRational) -> f64 {
    if !r.is_positive() {
        return f64::NAN;
    }
    ln_bigint(r.numer()) - ln_bigint(r.denom())
}

/// A model parameter or result value.
#[derive(Clone, Debug, PartialEq)]
pub enum Scalar {
    Exact(BigRational),
    Approx(f64),
}

impl Scalar {
    pub fn exact(n: i64, d: i64) -> Scalar {
        Scalar::Exact(BigRational::new(BigInt::from(n), BigInt::from(d)))
    }

    pub fn is_exact(&self) -> bool {
        matches!(self, Scalar::Exact(_))
    }

    pub fn to_f64(&self) -> f64 {
        match self {
            Scalar::Exact(r) => Field::to_f64(r),
            Scalar::Approx(x) => *x,
        }
    }

    pub fn as_exact(&self) -> Option<&BigRational> {
        match self {
            Scalar::Exact(r) => Some(r),
            Scalar::Approx(_) => None,
        }
    }

    pub fn is_zero(&self) -> bool {
        match self {
            Scalar::Exact(r) => Zero::is_zero(r),
            Scalar::Approx(x) => *x == 0.0,
        }
    }

    fn combine(
        &self,
        other: &Scalar,
        fe: impl Fn(&BigRational, &BigRational) -> BigRational,
        fa: impl Fn(f64, f64) -> f64,
    ) -> Result<Scalar> {
        match (self, other) {
            (Scalar::Exact(a), Scalar::Exact(b)) => Ok(Scalar::Exact(fe(a, b))),
            (Scalar::Approx(a), Scalar::Approx(b)) => Ok(Scalar::Approx(fa(*a, *b))),
            _ => Err(RcmError::MixedMode),
        }
    }

    pub fn try_add(&self, o: &Scalar) -> Result<Scalar> {
        self.combine(o, |a, b| a + b, |a, b| a + b)
    }
    pub fn try_sub(&self, o: &Scalar) -> Result<Scalar> {
        self.combine(o, |a, b| a - b, |a, b| a - b)
    }
    pub fn try_mul(&self, o: &Scalar) -> Result<Scalar> {
        self.combine(o, |a, b| a * b, |a, b| a * b)
    }
    pub fn try_div(&self, o: &Scalar) -> Result<Scalar> {
        if o.is_zero() {
            return Err(RcmError::Precondition("division by zero".into()));
        }
        self.combine(o, |a, b| a / b, |a, b| a / b)
    }

    pub fn powi(&self, n: i64) -> Scalar {
        match self {
            Scalar::Exact(r) => Scalar::Exact(Field::powi(r, n)),
            Scalar::Approx(x) => Scalar::Approx(f64::powi(*x, n as i32)),
        }
    }

    /// Same mode as `self`, value `n`.
    pub fn like(&self, n: i64) -> Scalar {
        match self {
            Scalar::Exact(_) => Scalar::Exact(BigRational::from_integer(n.into())),
            Scalar::Approx(_) => Scalar::Approx(n as f64),
        }
    }

    /// Parse `a/b`, an integer, or a decimal (with optional exponent).
    /// In exact mode decimals are converted without rounding.
    pub fn parse(s: &str, exact: bool) -> Result<Scalar> {
        let r = parse_rational(s)?;
        if exact {
            Ok(Scalar::Exact(r))
        } else {
            let v: f64 = if s.contains('/') {
                Field::to_f64(&r)
            } else {
                s.trim()
                    .parse()
                    .map_err(|_| RcmError::Parse(format!("bad number {s:?}")))?
            };
            Ok(Scalar::Approx(v))
        }
    }
}

impl fmt::Display for Scalar {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Scalar::Exact(r) => write!(f, "{}/{}", r.numer(), r.denom()),
            Scalar::Approx(x) => write!(f, "{}", fmt_f64(*x)),
        }
    }
}

/// Shortest round-trip formatting in scientific notation.
pub fn fmt_f64(x: f64) -> String {
    if x == 0.0 {
        "0".to_string()
    } else if x.is_finite() {
        format!("{x:e}")
    } else {
        format!("{x}")
    }
}

pub fn parse_rational(s: &str) -> Result<BigRational> {
    let s = s.trim();
    let bad = || RcmError::Parse(format!("bad number {s:?}"));
    if let Some((a, b)) = s.split_once('/') {
        let n: BigInt = a.trim().parse().map_err(|_| bad())?;
        let d: BigInt = b.trim().parse().map_err(|_| bad())?;
        if Zero::is_zero(&d) {
            return Err(bad());
        }
        return Ok(BigRational::new(n, d));
    }
    let (mant, exp) = match s.find(['e', 'E']) {
        Some(i) => (&s[..i], s[i + 1..].parse::<i64>().map_err(|_| bad())?),
        None => (s, 0),
    };
    let (neg, mant) = match mant.strip_prefix('-') {
        Some(m) => (true, m),
        None => (false, mant.strip_prefix('+').unwrap_or(mant)),
    };
    let (ip, fp) = mant.split_once('.').unwrap_or((mant, ""));
    if ip.is_empty() && fp.is_empty() {
        return Err(bad());
    }
    if !ip.chars().chain(fp.chars()).all(|c| c.is_ascii_digit()) {
        return Err(bad());
    }
    let digits: BigInt = format!("{ip}{fp}").parse().map_err(|_| bad())?;
    let scale = exp - fp.len() as i64;
    let ten = BigRational::from_integer(BigInt::from(10));
    let mut r = BigRational::from_integer(digits) * Field::powi(&ten, scale);
    if neg {
        r = -r;
    }
    Ok(r)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn decimals_are_exact() {
        let r = parse_rational("0.95").unwrap();
        assert_eq!(r, BigRational::new(19.into(), 20.into()));
        let r = parse_rational("2.5e-2").unwrap();
        assert_eq!(r, BigRational::new(1.into(), 40.into()));
        assert_eq!(parse_rational("3/6").unwrap(), BigRational::new(1.into(), 2.into()));
        assert!(parse_rational("1/0").is_err());
        assert!(parse_rational("abc").is_err());
        assert!(parse_rational(".").is_err());
    }

    #[test]
    fn mixed_mode_rejected() {
        let a = Scalar::exact(1, 2);
        let b = Scalar::Approx(0.5);
        assert_eq!(a.try_add(&b), Err(RcmError::MixedMode));
        assert_eq!(a.try_mul(&a).unwrap(), Scalar::exact(1, 4));
    }

    #[test]
    fn display_exact_integer_keeps_denominator() {
        assert_eq!(Scalar::exact(3, 1).to_string(), "3/1");
        assert_eq!(Scalar::exact(6, 4).to_string(), "3/2");
    }

    #[test]
    fn ln_of_huge_rational() {
        let big = Field::powi(&BigRational::from_int(10), 400);
        let l = ln_rational(&big);
        assert!((l - 400.0 * 10f64.ln()).abs() < 1e-9);
    }

    #[test]
    fn powi_negative() {
        let h = BigRational::new(1.into(), 2.into());
        assert_eq!(Field::powi(&h, -3), BigRational::from_int(8));
        assert_eq!(Field::powi(&3.0f64, 0), 1.0);
    }
}
