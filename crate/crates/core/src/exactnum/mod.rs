//! Exact integer and rational arithmetic, integer polynomials, projective
//! points over Q, resultants, p-adic valuations and floating-point
//! embeddings.

mod point;
mod poly;
mod roots;

use std::collections::BTreeMap;

use num_bigint::{BigInt, BigUint};
use num_integer::Integer;
use num_prime::nt_funcs::factors;
use num_prime::FactorizationConfig;
use num_traits::{One, Signed, ToPrimitive, Zero};

pub use point::{normalize_point, LogPoint, ProjPointQ};
pub use poly::{bareiss_determinant, resultant, IntPoly};
pub use roots::{
    aberth, convergents, exact_and_numeric_roots, horner, poly_roots_complex, quadratic_rational_roots, rat_to_f64,
    rational_roots, relative_residual, scaled_f64_coeffs, square_free_roots,
    DEFAULT_ROOT_RESIDUAL,
};

use crate::error::{Error, Result};

pub type BigRat = num_rational::BigRational;

/// Archimedean embedding of an algebraic number.
pub type ComplexVal = num_complex::Complex64;

/// Integers above this many bits are not handed to the factoring routine.
pub const DEFAULT_FACTOR_BITS: u64 = 320;

pub fn rat(n: i64, d: i64) -> BigRat {
    BigRat::new(n.into(), d.into())
}

/// `v_p(n)`, `None` for `n = 0`.
pub fn valuation_int(n: &BigInt, p: u64) -> Option<u64> {
    if n.is_zero() {
        return None;
    }
    let p = BigUint::from(p);
    let mut m = n.magnitude().clone();
    let mut v = 0;
    loop {
        let (q, r) = m.div_rem(&p);
        if !r.is_zero() {
            return Some(v);
        }
        m = q;
        v += 1;
    }
}

/// `v_p(q)`, with `None` standing for `+inf` at `q = 0`.
pub fn padic_valuation(q: &BigRat, p: u64) -> Option<i64> {
    let vn = valuation_int(q.numer(), p)? as i64;
    let vd = valuation_int(q.denom(), p).unwrap_or(0) as i64;
    Some(vn - vd)
}

/// `ln |n|`, accurate for integers of any size; `-inf` for zero.
pub fn ln_abs_big(n: &BigInt) -> f64 {
    ln_biguint(n.magnitude())
}

pub fn ln_biguint(n: &BigUint) -> f64 {
    if n.is_zero() {
        return f64::NEG_INFINITY;
    }
    let bits = n.bits();
    if bits <= 1000 {
        return n.to_f64().unwrap().ln();
    }
    let shift = bits - 64;
    let top: BigUint = n >> shift;
    top.to_f64().unwrap().ln() + shift as f64 * std::f64::consts::LN_2
}

/// Neumaier's compensated summation.
#[derive(Debug, Clone, Copy, Default)]
pub struct CompensatedSum {
    sum: f64,
    comp: f64,
}

impl CompensatedSum {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn add(&mut self, x: f64) {
        let t = self.sum + x;
        if self.sum.abs() >= x.abs() {
            self.comp += (self.sum - t) + x;
        } else {
            self.comp += (x - t) + self.sum;
        }
        self.sum = t;
    }

    pub fn value(&self) -> f64 {
        self.sum + self.comp
    }
}

impl FromIterator<f64> for CompensatedSum {
    fn from_iter<I: IntoIterator<Item = f64>>(iter: I) -> Self {
        let mut s = Self::new();
        for x in iter {
            s.add(x);
        }
        s
    }
}

/// Prime factorization of `|n|`, bounded by `max_bits`.
pub fn factor_int(n: &BigInt, max_bits: u64) -> Result<BTreeMap<BigUint, usize>> {
    let m = n.magnitude().clone();
    if m.is_zero() {
        return Err(Error::InvalidArgument("cannot factor zero".into()));
    }
    if m.is_one() {
        return Ok(BTreeMap::new());
    }
    if m.bits() > max_bits {
        // report what cheap trial division finds
        let mut partial = Vec::new();
        let mut rest = m.clone();
        for p in num_prime::nt_funcs::primes(10_000) {
            let pb = BigUint::from(p);
            if rest.is_multiple_of(&pb) {
                partial.push(pb.clone());
                while rest.is_multiple_of(&pb) {
                    rest /= &pb;
                }
            }
        }
        return Err(Error::FactorizationTooLarge {
            partial,
            remaining: vec![rest],
        });
    }
    let (found, failed) = factors(m, Some(FactorizationConfig::default()));
    match failed {
        Some(rest) if !rest.is_empty() => Err(Error::FactorizationTooLarge {
            partial: found.into_keys().collect(),
            remaining: rest,
        }),
        _ => Ok(found),
    }
}

/// An exact formal sum `sum_p c_p ln p` over primes with rational
/// coefficients. Two values are equal iff their real values are equal,
/// since logarithms of distinct primes are linearly independent over Q.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct ExactLog {
    terms: BTreeMap<BigUint, BigRat>,
}

impl ExactLog {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn add_prime(&mut self, p: BigUint, coef: &BigRat) {
        if coef.is_zero() {
            return;
        }
        let e = self.terms.entry(p.clone()).or_insert_with(BigRat::zero);
        *e += coef;
        if e.is_zero() {
            self.terms.remove(&p);
        }
    }

    /// Adds `coef * ln |n|`.
    pub fn add_log_int(&mut self, n: &BigInt, coef: &BigRat) -> Result<()> {
        for (p, e) in factor_int(n, DEFAULT_FACTOR_BITS)? {
            self.add_prime(p, &(coef * BigRat::from_integer(BigInt::from(e))));
        }
        Ok(())
    }

    /// Adds `coef * ln |q|`.
    pub fn add_log_rat(&mut self, q: &BigRat, coef: &BigRat) -> Result<()> {
        self.add_log_int(q.numer(), coef)?;
        self.add_log_int(q.denom(), &-coef)
    }

    pub fn add_assign(&mut self, other: &ExactLog) {
        for (p, c) in &other.terms {
            self.add_prime(p.clone(), c);
        }
    }

    pub fn scaled(&self, k: &BigRat) -> ExactLog {
        let mut out = ExactLog::new();
        for (p, c) in &self.terms {
            out.add_prime(p.clone(), &(c * k));
        }
        out
    }

    pub fn is_zero(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn terms(&self) -> &BTreeMap<BigUint, BigRat> {
        &self.terms
    }

    pub fn to_f64(&self) -> f64 {
        self.terms
            .iter()
            .map(|(p, c)| rat_to_f64(c) * ln_biguint(p))
            .collect::<CompensatedSum>()
            .value()
    }
}

pub fn is_prime_u64(p: u64) -> bool {
    num_prime::nt_funcs::is_prime64(p)
}

/// Exact square root of a non-negative rational if it is a square.
pub fn rat_sqrt(q: &BigRat) -> Option<BigRat> {
    if q.is_negative() {
        return None;
    }
    let n = q.numer().sqrt();
    let d = q.denom().sqrt();
    (&n * &n == *q.numer() && &d * &d == *q.denom()).then(|| BigRat::new(n, d))
}
