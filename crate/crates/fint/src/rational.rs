//! Exact arbitrary-precision rational scalars.
//!
//! Every scalar in this crate (breakpoints, tags, cell lengths, distances,
//! tolerances) is a [`Rational`]. Nothing is ever rounded; equality and
//! ordering are decidable, so theorem checks reduce to exact comparisons.

use std::fmt;
use std::iter::Sum;
use std::ops::{Add, Div, Mul, Neg, Sub};
use std::str::FromStr;

use num::bigint::BigInt;
use num::rational::BigRational;
use num::{One, Signed, ToPrimitive, Zero};
use serde::{Deserialize, Deserializer, Serialize, Serializer};
use thiserror::Error;

/// An exact rational number, always in lowest terms with a positive denominator.
#[derive(Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Rational(BigRational);

/// Errors from constructing or parsing a [`Rational`].
#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum RationalError {
    #[error("denominator must be nonzero")]
    ZeroDenominator,
    #[error("empty rational literal")]
    Empty,
    #[error("invalid integer `{0}` in rational literal")]
    InvalidInteger(String),
    #[error("division by zero")]
    DivisionByZero,
}

impl Rational {
    /// Builds `numer/denom`, reduced to lowest terms.
    pub fn new(numer: i64, denom: i64) -> Result<Self, RationalError> {
        if denom == 0 {
            return Err(RationalError::ZeroDenominator);
        }
        Ok(Rational(BigRational::new(numer.into(), denom.into())))
    }

    pub fn from_bigs(numer: BigInt, denom: BigInt) -> Result<Self, RationalError> {
        if denom.is_zero() {
            return Err(RationalError::ZeroDenominator);
        }
        Ok(Rational(BigRational::new(numer, denom)))
    }

    pub fn integer(n: i64) -> Self {
        Rational(BigRational::from_integer(n.into()))
    }

    pub fn zero() -> Self {
        Rational(BigRational::zero())
    }

    pub fn one() -> Self {
        Rational(BigRational::one())
    }

    /// Numerator of the reduced form (sign lives here).
    pub fn numer(&self) -> &BigInt {
        self.0.numer()
    }

    /// Denominator of the reduced form, always positive.
    pub fn denom(&self) -> &BigInt {
        self.0.denom()
    }

    pub fn is_zero(&self) -> bool {
        self.0.is_zero()
    }

    pub fn is_positive(&self) -> bool {
        self.0.is_positive()
    }

    pub fn is_negative(&self) -> bool {
        self.0.is_negative()
    }

    pub fn is_integer(&self) -> bool {
        self.0.is_integer()
    }

    pub fn abs(&self) -> Self {
        Rational(self.0.abs())
    }

    pub fn recip(&self) -> Result<Self, RationalError> {
        if self.is_zero() {
            return Err(RationalError::DivisionByZero);
        }
        Ok(Rational(self.0.recip()))
    }

    /// Largest integer `<= self`.
    pub fn floor_int(&self) -> BigInt {
        self.0.floor().to_integer()
    }

    /// Smallest integer `>= self`.
    pub fn ceil_int(&self) -> BigInt {
        self.0.ceil().to_integer()
    }

    /// Nearest `f64`, for human-readable output only. Lossy.
    pub fn to_f64_lossy(&self) -> f64 {
        self.0.to_f64().unwrap_or(f64::NAN)
    }
}

impl fmt::Display for Rational {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.0.is_integer() {
            write!(f, "{}", self.0.numer())
        } else {
            write!(f, "{}/{}", self.0.numer(), self.0.denom())
        }
    }
}

impl fmt::Debug for Rational {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self)
    }
}

impl FromStr for Rational {
    type Err = RationalError;

    /// Parses `"p/q"` or a bare integer `"p"`, with optional sign on `p`.
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let s = s.trim();
        if s.is_empty() {
            return Err(RationalError::Empty);
        }
        let parse_int = |part: &str| -> Result<BigInt, RationalError> {
            part.trim()
                .parse::<BigInt>()
                .map_err(|_| RationalError::InvalidInteger(part.trim().to_string()))
        };
        match s.split_once('/') {
            None => Ok(Rational(BigRational::from_integer(parse_int(s)?))),
            Some((p, q)) => {
                let numer = parse_int(p)?;
                let denom = parse_int(q)?;
                Rational::from_bigs(numer, denom)
            }
        }
    }
}

impl From<i64> for Rational {
    fn from(n: i64) -> Self {
        Rational::integer(n)
    }
}

impl From<u32> for Rational {
    fn from(n: u32) -> Self {
        Rational::integer(n as i64)
    }
}

impl From<u64> for Rational {
    fn from(n: u64) -> Self {
        Rational(BigRational::from_integer(n.into()))
    }
}

impl From<BigInt> for Rational {
    fn from(n: BigInt) -> Self {
        Rational(BigRational::from_integer(n))
    }
}

macro_rules! forward_binop {
    ($trait:ident, $method:ident) => {
        impl $trait for Rational {
            type Output = Rational;
            fn $method(self, rhs: Rational) -> Rational {
                Rational(self.0.$method(rhs.0))
            }
        }
        impl<'a> $trait<&'a Rational> for Rational {
            type Output = Rational;
            fn $method(self, rhs: &'a Rational) -> Rational {
                Rational(self.0.$method(&rhs.0))
            }
        }
        impl<'a> $trait<Rational> for &'a Rational {
            type Output = Rational;
            fn $method(self, rhs: Rational) -> Rational {
                Rational((&self.0).$method(rhs.0))
            }
        }
        impl<'a, 'b> $trait<&'b Rational> for &'a Rational {
            type Output = Rational;
            fn $method(self, rhs: &'b Rational) -> Rational {
                Rational((&self.0).$method(&rhs.0))
            }
        }
    };
}

forward_binop!(Add, add);
forward_binop!(Sub, sub);
forward_binop!(Mul, mul);
forward_binop!(Div, div);

impl Neg for Rational {
    type Output = Rational;
    fn neg(self) -> Rational {
        Rational(-self.0)
    }
}

impl Neg for &Rational {
    type Output = Rational;
    fn neg(self) -> Rational {
        Rational(-&self.0)
    }
}

impl Sum for Rational {
    fn sum<I: Iterator<Item = Rational>>(iter: I) -> Rational {
        iter.fold(Rational::zero(), |acc, x| acc + x)
    }
}

impl Serialize for Rational {
    fn serialize<S: Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        serializer.serialize_str(&self.to_string())
    }
}

impl<'de> Deserialize<'de> for Rational {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> Result<Self, D::Error> {
        let s = String::deserialize(deserializer)?;
        s.parse().map_err(serde::de::Error::custom)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn r(s: &str) -> Rational {
        s.parse().unwrap()
    }

    #[test]
    fn construction_reduces_to_lowest_terms() {
        let x = Rational::new(6, 8).unwrap();
        assert_eq!(x.numer(), &BigInt::from(3));
        assert_eq!(x.denom(), &BigInt::from(4));
        let y = Rational::new(3, -6).unwrap();
        assert_eq!(y.numer(), &BigInt::from(-1));
        assert_eq!(y.denom(), &BigInt::from(2));
    }

    #[test]
    fn zero_denominator_rejected() {
        assert_eq!(Rational::new(1, 0), Err(RationalError::ZeroDenominator));
    }

    #[test]
    fn parse_and_display_round_trip() {
        for s in ["0", "1", "-3", "1/2", "-7/3", "22/7"] {
            assert_eq!(r(s).to_string(), s);
        }
        assert_eq!(r(" 4/8 ").to_string(), "1/2");
        assert_eq!(r("-2/-4").to_string(), "1/2");
    }

    #[test]
    fn parse_errors() {
        assert_eq!("".parse::<Rational>(), Err(RationalError::Empty));
        assert!(matches!(
            "a/2".parse::<Rational>(),
            Err(RationalError::InvalidInteger(_))
        ));
        assert_eq!("1/0".parse::<Rational>(), Err(RationalError::ZeroDenominator));
    }

    #[test]
    fn arithmetic_is_exact() {
        let third = r("1/3");
        let sum = &third + &third + &third;
        assert_eq!(sum, Rational::one());
        assert_eq!(r("1/2") - r("1/3"), r("1/6"));
        assert_eq!(r("2/3") * r("3/4"), r("1/2"));
        assert_eq!(r("1/2") / r("1/8"), r("4"));
        assert_eq!(-r("1/2"), r("-1/2"));
    }

    #[test]
    fn ordering_and_bounds() {
        assert!(r("1/3") < r("1/2"));
        assert_eq!(r("-5/2").abs(), r("5/2"));
        assert_eq!(r("7/3").floor_int(), BigInt::from(2));
        assert_eq!(r("7/3").ceil_int(), BigInt::from(3));
        assert_eq!(r("-7/3").floor_int(), BigInt::from(-3));
    }

    #[test]
    fn serde_uses_fraction_strings() {
        let x = r("3/8");
        let json = serde_json::to_string(&x).unwrap();
        assert_eq!(json, "\"3/8\"");
        let back: Rational = serde_json::from_str(&json).unwrap();
        assert_eq!(back, x);
    }
}
