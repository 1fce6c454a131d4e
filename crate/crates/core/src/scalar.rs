//! Scalar abstraction shared by the exact and the sampled code paths.
//!
//! Creature entries are always exact rationals. Averages and error values can
//! be evaluated in any [`Scalar`]: [`Rational`] when an exact answer is needed,
//! `f64`/`f32` when many samples are folded into an estimate.

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{Float, One, Signed, ToPrimitive, Zero};
use std::fmt::Debug;
use std::ops::{Add, Mul, Sub};

use crate::Rational;

pub trait Scalar:
    Clone
    + Debug
    + PartialOrd
    + Zero
    + One
    + Add<Output = Self>
    + Sub<Output = Self>
    + Mul<Output = Self>
    + Send
    + Sync
{
    fn from_rational(r: &Rational) -> Self;
    fn abs_val(&self) -> Self;
    fn to_f64_lossy(&self) -> f64;

    fn dyadic(i: u64, k: u32) -> Self {
        Self::from_rational(&dyadic(i, k))
    }
}

impl Scalar for BigRational {
    fn from_rational(r: &Rational) -> Self {
        r.clone()
    }
    fn abs_val(&self) -> Self {
        self.abs()
    }
    fn to_f64_lossy(&self) -> f64 {
        rational_to_f64(self)
    }
}

macro_rules! float_scalar {
    ($t:ty) => {
        impl Scalar for $t {
            fn from_rational(r: &Rational) -> Self {
                rational_to_f64(r) as $t
            }
            fn abs_val(&self) -> Self {
                Float::abs(*self)
            }
            fn to_f64_lossy(&self) -> f64 {
                *self as f64
            }
        }
    };
}
float_scalar!(f32);
float_scalar!(f64);

/// `i / 2^k` as an exact rational.
pub fn dyadic(i: u64, k: u32) -> Rational {
    Rational::new(BigInt::from(i), BigInt::one() << k)
}

/// Converts without overflowing when numerator and denominator are both huge.
pub fn rational_to_f64(r: &Rational) -> f64 {
    if let (Some(n), Some(d)) = (r.numer().to_f64(), r.denom().to_f64()) {
        if n.is_finite() && d.is_finite() && d != 0.0 {
            return n / d;
        }
    }
    let shift = r.denom().bits().max(r.numer().bits()).saturating_sub(900);
    let n = (r.numer() >> shift).to_f64().unwrap_or(0.0);
    let d = (r.denom() >> shift).to_f64().unwrap_or(f64::INFINITY);
    n / d
}

pub fn rat(n: i64, d: i64) -> Rational {
    Rational::new(BigInt::from(n), BigInt::from(d))
}

/// Parses `num/den` or a bare integer.
pub fn parse_rational(s: &str) -> Option<Rational> {
    match s.split_once('/') {
        Some((n, d)) => {
            let n: BigInt = n.trim().parse().ok()?;
            let d: BigInt = d.trim().parse().ok()?;
            if d.is_zero() {
                return None;
            }
            Some(Rational::new(n, d))
        }
        None => s.trim().parse::<BigInt>().ok().map(Rational::from_integer),
    }
}

pub fn format_rational(r: &Rational) -> String {
    format!("{}/{}", r.numer(), r.denom())
}
