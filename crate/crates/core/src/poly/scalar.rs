//! Coefficient fields.
//!
//! Symbolic tables use exact rationals ([`Rational`]) or exact Gaussian
//! rationals ([`GaussianRational`], for powers of `i`); quadrature paths use
//! `Complex64`. Conversions between the two worlds are explicit.

use std::fmt::Debug;
use std::ops::{Add, Mul, Neg, Sub};
use std::str::FromStr;

use num_bigint::{BigInt, BigUint};
use num_complex::{Complex, Complex64};
use num_rational::BigRational;
use num_traits::{One, Signed, ToPrimitive, Zero};

use crate::error::{Error, Result};

pub type Rational = BigRational;
pub type GaussianRational = Complex<BigRational>;

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
    fn from_rational(r: &Rational) -> Self;

    fn from_biguint(n: &BigUint) -> Self {
        Self::from_rational(&Rational::from_integer(BigInt::from(n.clone())))
    }

    fn from_i64(n: i64) -> Self {
        Self::from_rational(&Rational::from_integer(BigInt::from(n)))
    }

    fn to_complex(&self) -> Complex64;

    /// Max of |re| and |im| as a float, used for residual reporting.
    fn magnitude(&self) -> f64 {
        let c = self.to_complex();
        c.re.abs().max(c.im.abs())
    }
}

impl Scalar for Rational {
    fn from_rational(r: &Rational) -> Self {
        r.clone()
    }

    fn to_complex(&self) -> Complex64 {
        Complex64::new(rational_to_f64(self), 0.0)
    }
}

impl Scalar for GaussianRational {
    fn from_rational(r: &Rational) -> Self {
        Complex::new(r.clone(), Rational::zero())
    }

    fn to_complex(&self) -> Complex64 {
        Complex64::new(rational_to_f64(&self.re), rational_to_f64(&self.im))
    }
}

impl Scalar for Complex64 {
    fn from_rational(r: &Rational) -> Self {
        Complex64::new(rational_to_f64(r), 0.0)
    }

    fn to_complex(&self) -> Complex64 {
        *self
    }
}

impl Scalar for f64 {
    fn from_rational(r: &Rational) -> Self {
        rational_to_f64(r)
    }

    fn to_complex(&self) -> Complex64 {
        Complex64::new(*self, 0.0)
    }
}

/// Nearest-ish f64 of a big rational, robust to numerators and denominators
/// that individually overflow f64.
pub fn rational_to_f64(r: &Rational) -> f64 {
    if let (Some(n), Some(d)) = (r.numer().to_f64(), r.denom().to_f64()) {
        if n.is_finite() && d.is_finite() && d != 0.0 {
            return n / d;
        }
    }
    let nb = r.numer().bits() as i64;
    let db = r.denom().bits() as i64;
    // Scale both to ~60 significant bits before dividing.
    let shift_n = (nb - 60).max(0);
    let shift_d = (db - 60).max(0);
    let n = (r.numer().abs() >> shift_n as usize).to_f64().unwrap_or(0.0);
    let d = (r.denom() >> shift_d as usize).to_f64().unwrap_or(1.0);
    let mag = (n / d) * 2f64.powi((shift_n - shift_d) as i32);
    if r.is_negative() {
        -mag
    } else {
        mag
    }
}

/// `i^k` as an exact Gaussian rational.
pub fn i_pow(k: u32) -> GaussianRational {
    let (re, im) = match k % 4 {
        0 => (1, 0),
        1 => (0, 1),
        2 => (-1, 0),
        _ => (0, -1),
    };
    Complex::new(
        Rational::from_integer(re.into()),
        Rational::from_integer(im.into()),
    )
}

/// `i^k` as a float complex.
pub fn i_pow_f64(k: u32) -> Complex64 {
    match k % 4 {
        0 => Complex64::new(1.0, 0.0),
        1 => Complex64::new(0.0, 1.0),
        2 => Complex64::new(-1.0, 0.0),
        _ => Complex64::new(0.0, -1.0),
    }
}

/// Parses `"p/q"` or `"p"` into an exact rational.
pub fn parse_rational(s: &str) -> Result<Rational> {
    let t = s.trim();
    if t.is_empty() {
        return Err(Error::Parse("empty rational".into()));
    }
    Rational::from_str(t).map_err(|e| Error::Parse(format!("bad rational {t:?}: {e}")))
}

/// Canonical fraction string: `"p"` for integers, `"p/q"` otherwise.
pub fn format_rational(r: &Rational) -> String {
    if r.is_integer() {
        r.numer().to_string()
    } else {
        format!("{}/{}", r.numer(), r.denom())
    }
}

pub fn rat(n: i64, d: i64) -> Rational {
    Rational::new(BigInt::from(n), BigInt::from(d))
}

pub fn gauss(re: Rational, im: Rational) -> GaussianRational {
    Complex::new(re, im)
}
