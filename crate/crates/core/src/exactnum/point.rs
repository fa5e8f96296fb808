use std::fmt;
use std::str::FromStr;

use num_bigint::BigInt;
use num_complex::Complex64;
use num_integer::Integer;
use num_traits::{One, Signed, Zero};

use super::{ln_abs_big, BigRat};
use crate::error::{Error, Result};

/// A point `[a : b]` of P^1(Q) in canonical form: coprime, `b > 0`, or
/// `[1 : 0]` for infinity.
#[derive(Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct ProjPointQ {
    a: BigInt,
    b: BigInt,
}

pub fn normalize_point(a: BigInt, b: BigInt) -> Result<ProjPointQ> {
    if a.is_zero() && b.is_zero() {
        return Err(Error::ZeroPoint);
    }
    if b.is_zero() {
        return Ok(ProjPointQ::infinity());
    }
    let g = a.gcd(&b);
    let (mut a, mut b) = (a / &g, b / &g);
    if b.is_negative() {
        a = -a;
        b = -b;
    }
    Ok(ProjPointQ { a, b })
}

impl ProjPointQ {
    /// Builds `[a : b]` from a pair already known to be coprime and not
    /// both zero; only the sign is normalized.
    pub(crate) fn from_coprime(a: BigInt, b: BigInt) -> Self {
        if b.is_zero() {
            return Self::infinity();
        }
        if b.is_negative() {
            Self { a: -a, b: -b }
        } else {
            Self { a, b }
        }
    }

    pub fn new(a: impl Into<BigInt>, b: impl Into<BigInt>) -> Result<Self> {
        normalize_point(a.into(), b.into())
    }

    pub fn infinity() -> Self {
        Self {
            a: BigInt::one(),
            b: BigInt::zero(),
        }
    }

    pub fn from_int(a: impl Into<BigInt>) -> Self {
        Self {
            a: a.into(),
            b: BigInt::one(),
        }
    }

    pub fn from_rat(q: &BigRat) -> Self {
        Self {
            a: q.numer().clone(),
            b: q.denom().clone(),
        }
    }

    pub fn a(&self) -> &BigInt {
        &self.a
    }

    pub fn b(&self) -> &BigInt {
        &self.b
    }

    pub fn is_infinity(&self) -> bool {
        self.b.is_zero()
    }

    pub fn to_rat(&self) -> Option<BigRat> {
        (!self.is_infinity()).then(|| BigRat::new(self.a.clone(), self.b.clone()))
    }

    pub fn to_complex(&self) -> Option<Complex64> {
        let lp = self.to_log_point();
        (!self.is_infinity()).then(|| lp.to_complex())
    }

    /// Log-polar embedding; exact up to the rounding of `ln`.
    pub fn to_log_point(&self) -> LogPoint {
        if self.is_infinity() {
            return LogPoint::INFINITY;
        }
        if self.a.is_zero() {
            return LogPoint::ZERO;
        }
        let arg = if self.a.is_negative() { std::f64::consts::PI } else { 0.0 };
        LogPoint::new(ln_abs_big(&self.a) - ln_abs_big(&self.b), arg)
    }

    /// Bit length of `max(|a|, |b|)`.
    pub fn bits(&self) -> u64 {
        self.a.bits().max(self.b.bits())
    }
}

impl fmt::Debug for ProjPointQ {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "[{} : {}]", self.a, self.b)
    }
}

impl fmt::Display for ProjPointQ {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.is_infinity() {
            write!(f, "inf")
        } else if self.b.is_one() {
            write!(f, "{}", self.a)
        } else {
            write!(f, "{}/{}", self.a, self.b)
        }
    }
}

impl FromStr for ProjPointQ {
    type Err = Error;

    /// Accepts `"a/b"`, `"a"` or `"inf"`.
    fn from_str(s: &str) -> Result<Self> {
        let s = s.trim();
        if s.eq_ignore_ascii_case("inf") || s == "∞" {
            return Ok(Self::infinity());
        }
        let bad = || Error::InvalidArgument(format!("cannot parse point {s:?}"));
        let (a, b) = match s.split_once('/') {
            Some((a, b)) => (a.trim(), b.trim()),
            None => (s, "1"),
        };
        let a: BigInt = a.parse().map_err(|_| bad())?;
        let b: BigInt = b.parse().map_err(|_| bad())?;
        normalize_point(a, b)
    }
}

/// A point of P^1(C) stored as `(ln|z|, arg z)`.
///
/// `ln|z| = -inf` is the origin and `+inf` is the point at infinity.
/// Backward orbits of general maps drift toward 0 or infinity where plain
/// doubles under/overflow; the log-scale magnitude avoids that.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LogPoint {
    pub log_abs: f64,
    pub arg: f64,
}

impl LogPoint {
    pub const ZERO: LogPoint = LogPoint {
        log_abs: f64::NEG_INFINITY,
        arg: 0.0,
    };
    pub const INFINITY: LogPoint = LogPoint {
        log_abs: f64::INFINITY,
        arg: 0.0,
    };

    /// Argument is reduced to `(-pi, pi]`.
    pub fn new(log_abs: f64, arg: f64) -> Self {
        Self {
            log_abs,
            arg: reduce_angle(arg),
        }
    }

    pub fn from_complex(z: Complex64) -> Self {
        if z.re == 0.0 && z.im == 0.0 {
            return Self::ZERO;
        }
        Self::new(z.norm().ln(), z.arg())
    }

    pub fn to_complex(&self) -> Complex64 {
        if self.log_abs == f64::NEG_INFINITY {
            return Complex64::new(0.0, 0.0);
        }
        Complex64::from_polar(self.log_abs.exp(), self.arg)
    }

    pub fn is_zero(&self) -> bool {
        self.log_abs == f64::NEG_INFINITY
    }

    pub fn is_infinity(&self) -> bool {
        self.log_abs == f64::INFINITY
    }

    pub fn abs(&self) -> f64 {
        self.log_abs.exp()
    }

    /// Argument in `[0, 2 pi)`.
    pub fn angle(&self) -> f64 {
        let a = self.arg.rem_euclid(std::f64::consts::TAU);
        if a >= std::f64::consts::TAU {
            0.0
        } else {
            a
        }
    }

    /// `ln max(|z|, 1)`.
    pub fn log_plus(&self) -> f64 {
        self.log_abs.max(0.0)
    }

    /// Homogeneous coordinates `(x, y)` with `max(|x|, |y|) = 1`.
    pub fn homogeneous(&self) -> (Complex64, Complex64) {
        let one = Complex64::new(1.0, 0.0);
        if self.is_infinity() {
            (one, Complex64::new(0.0, 0.0))
        } else if self.log_abs <= 0.0 {
            (self.to_complex(), one)
        } else {
            (
                Complex64::from_polar(1.0, self.arg),
                Complex64::new((-self.log_abs).exp(), 0.0),
            )
        }
    }

    /// Inverse of [`LogPoint::homogeneous`] for any nonzero pair.
    pub fn from_homogeneous(x: Complex64, y: Complex64) -> Self {
        if y.norm() == 0.0 {
            return Self::INFINITY;
        }
        if x.norm() == 0.0 {
            return Self::ZERO;
        }
        Self::new(x.norm().ln() - y.norm().ln(), x.arg() - y.arg())
    }

    /// Chordal distance on the Riemann sphere, in `[0, 1]`.
    pub fn chordal_distance(&self, other: &LogPoint) -> f64 {
        let (x1, y1) = self.homogeneous();
        let (x2, y2) = other.homogeneous();
        let n1 = (x1.norm_sqr() + y1.norm_sqr()).sqrt();
        let n2 = (x2.norm_sqr() + y2.norm_sqr()).sqrt();
        (x1 * y2 - x2 * y1).norm() / (n1 * n2)
    }
}

fn reduce_angle(a: f64) -> f64 {
    use std::f64::consts::{PI, TAU};
    if !a.is_finite() {
        return 0.0;
    }
    let mut r = a.rem_euclid(TAU);
    if r > PI {
        r -= TAU;
    }
    r
}
