//! Exact rationals and their `p/q` text form.

use alloc::format;
use alloc::string::String;

use num_bigint::{BigInt, BigUint, Sign};
use num_rational::BigRational;
use num_traits::{One, Signed, Zero};

use crate::error::{Error, Result};

pub type Rational = BigRational;

pub fn rat(numer: i64, denom: i64) -> Rational {
    Rational::new(BigInt::from(numer), BigInt::from(denom))
}

pub fn from_biguint(value: &BigUint) -> Rational {
    Rational::from_integer(BigInt::from_biguint(Sign::Plus, value.clone()))
}

pub fn from_u64(value: u64) -> Rational {
    Rational::from_integer(BigInt::from(value))
}

/// Always `p/q`, including integers (`3/1`) and zero (`0/1`).
pub fn fmt_rational(value: &Rational) -> String {
    format!("{}/{}", value.numer(), value.denom())
}

/// Accepts `p/q` or a bare integer `p`.
pub fn parse_rational(text: &str) -> Result<Rational> {
    let text = text.trim();
    let bad = || Error::Parse(format!("not a rational: {text:?}"));
    let (numer, denom) = match text.split_once('/') {
        Some((p, q)) => (p.trim(), q.trim()),
        None => (text, "1"),
    };
    let numer: BigInt = numer.parse().map_err(|_| bad())?;
    let denom: BigInt = denom.parse().map_err(|_| bad())?;
    if denom.is_zero() {
        return Err(bad());
    }
    Ok(Rational::new(numer, denom))
}

/// Square root of a nonnegative rational when it is itself rational.
pub fn exact_sqrt(value: &Rational) -> Option<Rational> {
    if value.is_negative() {
        return None;
    }
    let numer = value.numer().magnitude();
    let denom = value.denom().magnitude();
    let rn = numer.sqrt();
    let rd = denom.sqrt();
    if &(&rn * &rn) == numer && &(&rd * &rd) == denom {
        Some(Rational::new(
            BigInt::from_biguint(Sign::Plus, rn),
            BigInt::from_biguint(Sign::Plus, rd),
        ))
    } else {
        None
    }
}

pub fn is_probability(value: &Rational) -> bool {
    !value.is_negative() && value <= &Rational::one()
}
