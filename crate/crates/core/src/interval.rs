//! Outward-rounded interval scalars.
//!
//! An [`Interval`] encloses a real number between two rationals. Inexact
//! results are rounded to dyadic endpoints `m * 2^e` with a fixed number of
//! mantissa bits: lower endpoints toward `-inf`, upper endpoints toward
//! `+inf`. Exact rationals embed as degenerate intervals. `e` and `pi` come
//! from bracketing series, so the enclosures are rigorous at any precision.

use alloc::format;
use alloc::string::{String, ToString};
use core::cmp::Ordering;
use core::fmt;
use core::ops::{Add, Div, Mul, Neg, Sub};

use num_bigint::BigInt;
use num_integer::Integer;
use num_traits::{One, Pow, Signed, ToPrimitive, Zero};

use crate::error::{Error, Result};
use crate::rational::{exact_sqrt, Rational};

/// Working precision and refinement cap, in mantissa bits.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Precision {
    pub bits: u32,
    pub cap: u32,
}

impl Default for Precision {
    fn default() -> Self {
        Precision { bits: 128, cap: 1024 }
    }
}

impl Precision {
    pub fn new(bits: u32, cap: u32) -> Self {
        Precision { bits: bits.max(8), cap: cap.max(bits.max(8)) }
    }

    /// The next precision to try after an inconclusive comparison.
    pub fn doubled(self) -> Option<Precision> {
        let bits = self.bits.checked_mul(2)?;
        (bits <= self.cap).then_some(Precision { bits, cap: self.cap })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Round {
    Down,
    Up,
}

fn div_round(num: &BigInt, den: &BigInt, dir: Round) -> BigInt {
    match dir {
        Round::Down => num.div_floor(den),
        Round::Up => -(-num).div_floor(den),
    }
}

fn pow2(e: u64) -> BigInt {
    BigInt::one() << e
}

/// Rounds to a dyadic rational with about `bits` significant bits.
fn round_rational(r: &Rational, bits: u32, dir: Round) -> Rational {
    if r.is_zero() {
        return Rational::zero();
    }
    if r.denom().is_one() && r.numer().bits() <= bits as u64 {
        return r.clone();
    }
    let e = r.numer().bits() as i64 - r.denom().bits() as i64;
    let s = bits as i64 - e + 1;
    if s >= 0 {
        let m = div_round(&(r.numer() << s as u64), r.denom(), dir);
        Rational::new(m, pow2(s as u64))
    } else {
        let m = div_round(r.numer(), &(r.denom() << (-s) as u64), dir);
        Rational::from_integer(m << (-s) as u64)
    }
}

/// Directed square root of a nonnegative rational, exact on perfect squares.
fn sqrt_rational(r: &Rational, bits: u32, dir: Round) -> Rational {
    if let Some(root) = exact_sqrt(r) {
        return root;
    }
    let e = r.numer().bits() as i64 - r.denom().bits() as i64;
    let s = ((2 * bits as i64 + 4 - e) / 2).max(0) as u64;
    let scaled = div_round(&(r.numer() << (2 * s)), r.denom(), dir);
    let mut root = scaled.sqrt();
    if dir == Round::Up && &root * &root != scaled {
        root += 1;
    }
    round_rational(&Rational::new(root, pow2(s)), bits, dir)
}

fn size_bits(r: &Rational) -> u64 {
    r.numer().bits() + r.denom().bits()
}

/// A closed interval `[lo, hi]` certified to contain some real value.
///
/// Degenerate intervals keep their exact rational value as long as it stays
/// below a size budget tied to the precision; everything else is rounded
/// outward to dyadic endpoints with `bits` significant bits.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Interval {
    lo: Rational,
    hi: Rational,
    bits: u32,
}

impl Interval {
    fn make(lo: Rational, hi: Rational, bits: u32) -> Interval {
        debug_assert!(lo <= hi);
        if lo == hi && size_bits(&lo) <= 4 * bits as u64 {
            return Interval { hi: lo.clone(), lo, bits };
        }
        Interval {
            lo: round_rational(&lo, bits, Round::Down),
            hi: round_rational(&hi, bits, Round::Up),
            bits,
        }
    }

    pub fn from_rational(value: &Rational, bits: u32) -> Interval {
        Interval::make(value.clone(), value.clone(), bits)
    }

    pub fn from_integer(value: i64, bits: u32) -> Interval {
        Interval::from_rational(&Rational::from_integer(BigInt::from(value)), bits)
    }

    pub fn zero(bits: u32) -> Interval {
        Interval { lo: Rational::zero(), hi: Rational::zero(), bits }
    }

    pub fn one(bits: u32) -> Interval {
        Interval::from_integer(1, bits)
    }

    /// Builds `[lo, hi]` from rational endpoints, rounding outward.
    pub fn from_bounds(lo: &Rational, hi: &Rational, bits: u32) -> Result<Interval> {
        if lo > hi {
            return Err(Error::BadParams("interval with lo > hi".to_string()));
        }
        Ok(Interval::make(lo.clone(), hi.clone(), bits))
    }

    /// Euler's number, from the factorial series with its tail bound.
    pub fn e(bits: u32) -> Interval {
        let target = BigInt::one() << (bits as u64 + 8);
        let mut k: u64 = 1;
        let mut fact = BigInt::one();
        let mut numer = BigInt::from(2); // sum_{j<=k} k!/j! for k = 1
        while &fact * BigInt::from(k) <= target {
            k += 1;
            fact *= k;
            numer = numer * k + 1;
        }
        let partial = Rational::new(numer, fact.clone());
        let tail = Rational::new(BigInt::one(), fact * BigInt::from(k));
        Interval::make(partial.clone(), partial + tail, bits)
    }

    /// `pi = 16 atan(1/5) - 4 atan(1/239)`, each arctangent bracketed by
    /// consecutive partial sums of its alternating series.
    pub fn pi(bits: u32) -> Interval {
        let (a_lo, a_hi) = atan_inv_bracket(5, bits + 8);
        let (b_lo, b_hi) = atan_inv_bracket(239, bits + 8);
        let sixteen = Rational::from_integer(BigInt::from(16));
        let four = Rational::from_integer(BigInt::from(4));
        let lo = &sixteen * a_lo - &four * b_hi;
        let hi = &sixteen * a_hi - &four * b_lo;
        Interval::make(lo, hi, bits)
    }

    pub fn bits(&self) -> u32 {
        self.bits
    }

    pub fn lo(&self) -> Rational {
        self.lo.clone()
    }

    pub fn hi(&self) -> Rational {
        self.hi.clone()
    }

    pub fn is_exact(&self) -> bool {
        self.lo == self.hi
    }

    /// The exact value of a degenerate interval.
    pub fn exact_value(&self) -> Option<&Rational> {
        self.is_exact().then_some(&self.lo)
    }

    pub fn contains(&self, value: &Rational) -> bool {
        &self.lo <= value && value <= &self.hi
    }

    pub fn contains_interval(&self, other: &Interval) -> bool {
        self.lo <= other.lo && other.hi <= self.hi
    }

    /// `Some(ordering)` when every point of the interval compares the same way.
    pub fn cmp_rational(&self, value: &Rational) -> Option<Ordering> {
        if &self.hi < value {
            Some(Ordering::Less)
        } else if &self.lo > value {
            Some(Ordering::Greater)
        } else if &self.lo == value && &self.hi == value {
            Some(Ordering::Equal)
        } else {
            None
        }
    }

    /// Certainly `self <= other`.
    pub fn certainly_le(&self, other: &Interval) -> bool {
        self.hi <= other.lo
    }

    /// Certainly `self > other`.
    pub fn certainly_gt(&self, other: &Interval) -> bool {
        self.lo > other.hi
    }

    pub fn width(&self) -> Rational {
        &self.hi - &self.lo
    }

    fn bits_with(&self, other: &Interval) -> u32 {
        self.bits.max(other.bits)
    }

    pub fn sqrt(&self) -> Interval {
        assert!(!self.hi.is_negative(), "square root of a negative interval");
        if let Some(root) = self.exact_value().and_then(exact_sqrt) {
            return Interval::make(root.clone(), root, self.bits);
        }
        let lo = if self.lo.is_negative() {
            Rational::zero()
        } else {
            sqrt_rational(&self.lo, self.bits, Round::Down)
        };
        Interval::make(lo, sqrt_rational(&self.hi, self.bits, Round::Up), self.bits)
    }

    pub fn powi(&self, exp: u64) -> Interval {
        let mut result = Interval::one(self.bits);
        let mut base = self.clone();
        let mut e = exp;
        while e > 0 {
            if e & 1 == 1 {
                result = &result * &base;
            }
            e >>= 1;
            if e > 0 {
                base = base.square();
            }
        }
        result
    }

    /// `x^(twice / 2)` for a nonnegative base.
    pub fn pow_half(&self, twice: u64) -> Interval {
        let whole = self.powi(twice / 2);
        if twice % 2 == 0 {
            whole
        } else {
            &whole * &self.sqrt()
        }
    }

    pub fn square(&self) -> Interval {
        let a = &self.lo * &self.lo;
        let b = &self.hi * &self.hi;
        if !self.lo.is_negative() {
            Interval::make(a, b, self.bits)
        } else if self.hi.is_negative() {
            Interval::make(b, a, self.bits)
        } else {
            Interval::make(Rational::zero(), a.max(b), self.bits)
        }
    }

    pub fn recip(&self) -> Interval {
        Interval::one(self.bits) / self
    }

    pub fn checked_div(&self, other: &Interval) -> Option<Interval> {
        if !(other.lo.is_positive() || other.hi.is_negative()) {
            return None;
        }
        let corners = [
            &self.lo / &other.lo,
            &self.lo / &other.hi,
            &self.hi / &other.lo,
            &self.hi / &other.hi,
        ];
        let lo = corners.iter().min().expect("four corners").clone();
        let hi = corners.iter().max().expect("four corners").clone();
        Some(Interval::make(lo, hi, self.bits_with(other)))
    }

    pub fn max(&self, other: &Interval) -> Interval {
        Interval::make(
            self.lo.clone().max(other.lo.clone()),
            self.hi.clone().max(other.hi.clone()),
            self.bits_with(other),
        )
    }

    pub fn mul_rational(&self, value: &Rational) -> Interval {
        self * &Interval::from_rational(value, self.bits)
    }

    /// Re-rounds both endpoints to `bits`.
    pub fn with_bits(&self, bits: u32) -> Interval {
        Interval::make(self.lo.clone(), self.hi.clone(), bits)
    }

    pub fn midpoint_f64(&self) -> f64 {
        let mid = (&self.lo + &self.hi) / Rational::from_integer(BigInt::from(2));
        mid.to_f64().unwrap_or(f64::NAN)
    }

    /// Decimal lower endpoint with `digits` significant digits, rounded down.
    pub fn lo_decimal(&self, digits: u32) -> String {
        decimal_string(&self.lo, digits, Round::Down)
    }

    /// Decimal upper endpoint with `digits` significant digits, rounded up.
    pub fn hi_decimal(&self, digits: u32) -> String {
        decimal_string(&self.hi, digits, Round::Up)
    }
}

fn atan_inv_bracket(x: u64, bits: u32) -> (Rational, Rational) {
    // atan(1/x) = sum_k (-1)^k / ((2k+1) x^(2k+1)); partial sums alternate around the limit.
    let x = BigInt::from(x);
    let x2 = &x * &x;
    let tol = BigInt::one() << bits as u64;
    let mut power = x.clone();
    let mut sum = Rational::zero();
    let mut k: u64 = 0;
    loop {
        let term = Rational::new(BigInt::one(), BigInt::from(2 * k + 1) * &power);
        let prev = sum.clone();
        if k % 2 == 0 {
            sum += &term;
        } else {
            sum -= &term;
        }
        if BigInt::from(2 * k + 1) * &power > tol && k % 2 == 1 {
            // prev is an upper partial sum, sum a lower one.
            return (sum, prev);
        }
        power *= &x2;
        k += 1;
    }
}

fn decimal_string(value: &Rational, digits: u32, dir: Round) -> String {
    if value.is_zero() {
        return "0".to_string();
    }
    let digits = digits.max(1) as i64;
    let negative = value.is_negative();
    let magnitude = value.abs();
    let ten = BigInt::from(10);
    let pow10 = |e: i64| -> Rational {
        if e >= 0 {
            Rational::from_integer(Pow::pow(&ten, e as u64))
        } else {
            Rational::new(BigInt::one(), Pow::pow(&ten, (-e) as u64))
        }
    };
    let est = ((magnitude.numer().bits() as f64 - magnitude.denom().bits() as f64)
        * core::f64::consts::LOG10_2) as i64;
    let mut e10 = est;
    while pow10(e10) > magnitude {
        e10 -= 1;
    }
    while pow10(e10 + 1) <= magnitude {
        e10 += 1;
    }
    let scale = digits - 1 - e10;
    let scaled = magnitude * pow10(scale);
    // Rounding a negative value down means rounding its magnitude up.
    let magnitude_dir = if negative {
        match dir {
            Round::Down => Round::Up,
            Round::Up => Round::Down,
        }
    } else {
        dir
    };
    let m = match magnitude_dir {
        Round::Down => scaled.floor().to_integer(),
        Round::Up => scaled.ceil().to_integer(),
    };
    let text = m.to_string();
    let exponent = text.len() as i64 - 1 - scale;
    let (head, tail) = text.split_at(1);
    let tail = tail.trim_end_matches('0');
    let sign = if negative { "-" } else { "" };
    if tail.is_empty() {
        format!("{sign}{head}e{exponent}")
    } else {
        format!("{sign}{head}.{tail}e{exponent}")
    }
}

/// Parses `[-]digits[.digits][e[+-]digits]` into an exact rational.
pub fn parse_decimal(text: &str) -> Result<Rational> {
    let bad = || Error::Parse(format!("not a decimal: {text:?}"));
    let t = text.trim();
    let (mantissa, exponent) = match t.find(['e', 'E']) {
        Some(i) => (&t[..i], t[i + 1..].parse::<i64>().map_err(|_| bad())?),
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
    let digits: BigInt = format!("{int_part}{frac_part}0").parse().map_err(|_| bad())?;
    let digits = digits / 10;
    let shift = exponent - frac_part.len() as i64;
    let ten = BigInt::from(10);
    let mut value = if shift >= 0 {
        Rational::from_integer(digits * Pow::pow(&ten, shift as u64))
    } else {
        Rational::new(digits, Pow::pow(&ten, (-shift) as u64))
    };
    if negative {
        value = -value;
    }
    Ok(value)
}

impl fmt::Display for Interval {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "[{}, {}]", self.lo_decimal(12), self.hi_decimal(12))
    }
}

impl Add for &Interval {
    type Output = Interval;
    fn add(self, other: &Interval) -> Interval {
        Interval::make(&self.lo + &other.lo, &self.hi + &other.hi, self.bits_with(other))
    }
}

impl Sub for &Interval {
    type Output = Interval;
    fn sub(self, other: &Interval) -> Interval {
        Interval::make(&self.lo - &other.hi, &self.hi - &other.lo, self.bits_with(other))
    }
}

impl Neg for &Interval {
    type Output = Interval;
    fn neg(self) -> Interval {
        Interval { lo: -&self.hi, hi: -&self.lo, bits: self.bits }
    }
}

impl Mul for &Interval {
    type Output = Interval;
    fn mul(self, other: &Interval) -> Interval {
        if self.is_exact() && other.is_exact() {
            return Interval::make(&self.lo * &other.lo, &self.lo * &other.lo, self.bits_with(other));
        }
        let products = [
            &self.lo * &other.lo,
            &self.lo * &other.hi,
            &self.hi * &other.lo,
            &self.hi * &other.hi,
        ];
        let lo = products.iter().min().expect("four products").clone();
        let hi = products.iter().max().expect("four products").clone();
        Interval::make(lo, hi, self.bits_with(other))
    }
}

impl Div for &Interval {
    type Output = Interval;
    fn div(self, other: &Interval) -> Interval {
        self.checked_div(other).expect("interval division by an interval containing zero")
    }
}

macro_rules! owned_ops {
    ($($tr:ident $m:ident),*) => {$(
        impl $tr for Interval {
            type Output = Interval;
            fn $m(self, other: Interval) -> Interval { (&self).$m(&other) }
        }
        impl $tr<&Interval> for Interval {
            type Output = Interval;
            fn $m(self, other: &Interval) -> Interval { (&self).$m(other) }
        }
    )*};
}
owned_ops!(Add add, Sub sub, Mul mul, Div div);
