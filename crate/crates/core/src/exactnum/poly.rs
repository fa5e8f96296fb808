use std::fmt;

use num_bigint::BigInt;
use num_integer::Integer;
use num_traits::{One, Signed, Zero};

use super::BigRat;
use crate::error::{Error, Result};

/// Dense integer polynomial, coefficients in ascending degree order.
///
/// The zero polynomial has no coefficients; otherwise the last coefficient
/// is nonzero.
#[derive(Clone, PartialEq, Eq, Hash, Default)]
pub struct IntPoly {
    coeffs: Vec<BigInt>,
}

impl IntPoly {
    pub fn new(mut coeffs: Vec<BigInt>) -> Self {
        while coeffs.last().is_some_and(|c| c.is_zero()) {
            coeffs.pop();
        }
        Self { coeffs }
    }

    pub fn from_i64(coeffs: &[i64]) -> Self {
        Self::new(coeffs.iter().map(|&c| BigInt::from(c)).collect())
    }

    pub fn zero() -> Self {
        Self { coeffs: Vec::new() }
    }

    pub fn one() -> Self {
        Self::constant(BigInt::one())
    }

    pub fn constant(c: BigInt) -> Self {
        Self::new(vec![c])
    }

    /// `x - r` scaled to `den * x - num` for `r = num/den`.
    pub fn linear_root(r: &BigRat) -> Self {
        Self::new(vec![-r.numer().clone(), r.denom().clone()])
    }

    pub fn coeffs(&self) -> &[BigInt] {
        &self.coeffs
    }

    pub fn is_zero(&self) -> bool {
        self.coeffs.is_empty()
    }

    pub fn degree(&self) -> Option<usize> {
        self.coeffs.len().checked_sub(1)
    }

    pub fn lead(&self) -> Option<&BigInt> {
        self.coeffs.last()
    }

    pub fn coeff(&self, i: usize) -> BigInt {
        self.coeffs.get(i).cloned().unwrap_or_default()
    }

    pub fn eval_rat(&self, x: &BigRat) -> BigRat {
        let mut acc = BigRat::zero();
        for c in self.coeffs.iter().rev() {
            acc = acc * x + BigRat::from_integer(c.clone());
        }
        acc
    }

    /// Homogenized evaluation `sum c_i p^i q^(deg-i)`; zero iff `p/q` is a root.
    pub fn eval_homogeneous(&self, p: &BigInt, q: &BigInt) -> BigInt {
        let Some(d) = self.degree() else {
            return BigInt::zero();
        };
        let mut acc = BigInt::zero();
        let mut qpow = BigInt::one();
        // Horner in p with increasing powers of q
        for (k, c) in self.coeffs.iter().rev().enumerate() {
            if k == 0 {
                acc = c.clone();
            } else {
                qpow *= q;
                acc = acc * p + c * &qpow;
            }
        }
        debug_assert!(d + 1 == self.coeffs.len());
        acc
    }

    pub fn derivative(&self) -> Self {
        Self::new(
            self.coeffs
                .iter()
                .enumerate()
                .skip(1)
                .map(|(i, c)| c * BigInt::from(i))
                .collect(),
        )
    }

    pub fn add(&self, other: &Self) -> Self {
        let n = self.coeffs.len().max(other.coeffs.len());
        Self::new((0..n).map(|i| self.coeff(i) + other.coeff(i)).collect())
    }

    pub fn sub(&self, other: &Self) -> Self {
        let n = self.coeffs.len().max(other.coeffs.len());
        Self::new((0..n).map(|i| self.coeff(i) - other.coeff(i)).collect())
    }

    pub fn mul(&self, other: &Self) -> Self {
        if self.is_zero() || other.is_zero() {
            return Self::zero();
        }
        let mut out = vec![BigInt::zero(); self.coeffs.len() + other.coeffs.len() - 1];
        for (i, a) in self.coeffs.iter().enumerate() {
            if a.is_zero() {
                continue;
            }
            for (j, b) in other.coeffs.iter().enumerate() {
                out[i + j] += a * b;
            }
        }
        Self::new(out)
    }

    pub fn scale(&self, k: &BigInt) -> Self {
        Self::new(self.coeffs.iter().map(|c| c * k).collect())
    }

    pub fn content(&self) -> BigInt {
        self.coeffs
            .iter()
            .fold(BigInt::zero(), |g, c| g.gcd(c))
    }

    /// Content removed and leading coefficient made positive.
    pub fn primitive_part(&self) -> Self {
        if self.is_zero() {
            return Self::zero();
        }
        let mut g = self.content();
        if self.lead().is_some_and(|l| l.is_negative()) {
            g = -g;
        }
        Self::new(self.coeffs.iter().map(|c| c / &g).collect())
    }

    /// Pseudo-remainder: `lc(b)^(deg a - deg b + 1) * a mod b`.
    pub fn pseudo_rem(&self, b: &Self) -> Self {
        let db = b.degree().expect("pseudo_rem by zero polynomial");
        let lb = b.lead().unwrap().clone();
        let mut r = self.clone();
        while let Some(dr) = r.degree() {
            if dr < db {
                break;
            }
            let lr = r.lead().unwrap().clone();
            let shift = dr - db;
            let mut next: Vec<BigInt> = r.coeffs.iter().map(|c| c * &lb).collect();
            for (j, c) in b.coeffs.iter().enumerate() {
                next[j + shift] -= &lr * c;
            }
            r = Self::new(next);
        }
        r
    }

    /// Primitive gcd over Z[x] (equivalently the monic gcd over Q up to a
    /// rational factor). Leading coefficient positive.
    pub fn gcd(&self, other: &Self) -> Self {
        let mut a = self.primitive_part();
        let mut b = other.primitive_part();
        if a.degree() < b.degree() {
            std::mem::swap(&mut a, &mut b);
        }
        while !b.is_zero() {
            let r = a.pseudo_rem(&b).primitive_part();
            a = b;
            b = r;
        }
        a
    }

    /// Exact division over Z; `None` if `b` does not divide `self` in Z[x].
    pub fn div_exact(&self, b: &Self) -> Option<Self> {
        let db = b.degree()?;
        if self.is_zero() {
            return Some(Self::zero());
        }
        let da = self.degree().unwrap();
        if da < db {
            return None;
        }
        let lb = b.lead().unwrap();
        let mut r = self.coeffs.clone();
        let mut q = vec![BigInt::zero(); da - db + 1];
        for k in (0..=da - db).rev() {
            let top = &r[k + db];
            if top.is_zero() {
                continue;
            }
            let (qk, rem) = top.div_rem(lb);
            if !rem.is_zero() {
                return None;
            }
            for (j, c) in b.coeffs.iter().enumerate() {
                r[k + j] -= &qk * c;
            }
            q[k] = qk;
        }
        if r.iter().all(|c| c.is_zero()) {
            Some(Self::new(q))
        } else {
            None
        }
    }

    /// Yun's square-free decomposition of the primitive part: returns
    /// `(g_i, i)` with `pp(f) = prod g_i^i`, every `g_i` square-free,
    /// primitive and of degree at least one.
    pub fn square_free_decomposition(&self) -> Vec<(IntPoly, usize)> {
        let f = self.primitive_part();
        if f.degree().unwrap_or(0) == 0 {
            return Vec::new();
        }
        let df = f.derivative();
        let a0 = f.gcd(&df);
        let mut b_cur = f.div_exact(&a0).expect("gcd divides f");
        let c = df.div_exact(&a0).expect("gcd divides f'");
        let mut d = c.sub(&b_cur.derivative());
        let mut out = Vec::new();
        let mut i = 1;
        while b_cur.degree().unwrap_or(0) > 0 {
            let a = b_cur.gcd(&d);
            if a.degree().unwrap_or(0) > 0 {
                out.push((a.clone(), i));
            }
            let b_next = b_cur.div_exact(&a).expect("gcd divides b");
            let c_next = d.div_exact(&a).expect("gcd divides d");
            d = c_next.sub(&b_next.derivative());
            b_cur = b_next;
            i += 1;
        }
        out
    }

    /// Multiplicity of the rational root `r` (0 if not a root).
    pub fn root_multiplicity(&self, r: &BigRat) -> usize {
        if self.is_zero() {
            return usize::MAX;
        }
        let lin = Self::linear_root(r);
        let mut cur = self.clone();
        let mut m = 0;
        while let Some(q) = cur.div_exact(&lin) {
            if q.is_zero() {
                break;
            }
            cur = q;
            m += 1;
        }
        m
    }
}

impl fmt::Debug for IntPoly {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "IntPoly({self})")
    }
}

impl fmt::Display for IntPoly {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.is_zero() {
            return write!(f, "0");
        }
        let mut first = true;
        for (i, c) in self.coeffs.iter().enumerate().rev() {
            if c.is_zero() {
                continue;
            }
            if !first {
                write!(f, " {} ", if c.is_negative() { '-' } else { '+' })?;
            } else if c.is_negative() {
                write!(f, "-")?;
            }
            first = false;
            let a = c.abs();
            match i {
                0 => write!(f, "{a}")?,
                _ if a.is_one() => {}
                _ => write!(f, "{a}*")?,
            }
            match i {
                0 => {}
                1 => write!(f, "x")?,
                _ => write!(f, "x^{i}")?,
            }
        }
        Ok(())
    }
}

/// Homogeneous resultant of two binary forms of degree `d`, each given as
/// `d + 1` coefficients where index `i` multiplies `X^i Y^(d-i)`.
///
/// Sylvester determinant with rows ordered by descending powers of `X`, so
/// that `Res(a X^d, b Y^d) = a^d b^d`.
pub fn resultant(f: &[BigInt], g: &[BigInt], d: usize) -> Result<BigInt> {
    for form in [f, g] {
        if form.len() != d + 1 {
            return Err(Error::DegreeMismatch {
                expected: d,
                found: form.len().saturating_sub(1),
            });
        }
    }
    if d == 0 {
        return Ok(BigInt::one());
    }
    let n = 2 * d;
    let mut m = vec![vec![BigInt::zero(); n]; n];
    for i in 0..d {
        for j in 0..=d {
            m[i][i + j] = f[d - j].clone();
            m[d + i][i + j] = g[d - j].clone();
        }
    }
    Ok(bareiss_determinant(m))
}

/// Fraction-free Gaussian elimination.
pub fn bareiss_determinant(mut m: Vec<Vec<BigInt>>) -> BigInt {
    let n = m.len();
    if n == 0 {
        return BigInt::one();
    }
    let mut sign = BigInt::one();
    let mut prev = BigInt::one();
    for k in 0..n - 1 {
        if m[k][k].is_zero() {
            let Some(swap) = (k + 1..n).find(|&i| !m[i][k].is_zero()) else {
                return BigInt::zero();
            };
            m.swap(k, swap);
            sign = -sign;
        }
        for i in k + 1..n {
            for j in k + 1..n {
                let v = &m[i][j] * &m[k][k] - &m[i][k] * &m[k][j];
                m[i][j] = v / &prev;
            }
        }
        prev = m[k][k].clone();
    }
    sign * &m[n - 1][n - 1]
}

#[cfg(test)]
mod tests {
    use super::*;

    fn p(c: &[i64]) -> IntPoly {
        IntPoly::from_i64(c)
    }

    fn b(v: &[i64]) -> Vec<BigInt> {
        v.iter().map(|&x| BigInt::from(x)).collect()
    }

    #[test]
    fn gcd_of_shared_factor() {
        // (x-1)(x+2) and (x-1)(x-3)
        let a = p(&[-2, 1, 1]);
        let c = p(&[3, -4, 1]);
        assert_eq!(a.gcd(&c), p(&[-1, 1]));
        assert_eq!(p(&[1, 1]).gcd(&p(&[2, 1])), p(&[1]));
    }

    #[test]
    fn square_free_decomposition_of_mixed_powers() {
        // (x-1)^3 (x+2)^2 (2x+1)
        let f = p(&[-1, 1])
            .mul(&p(&[-1, 1]))
            .mul(&p(&[-1, 1]))
            .mul(&p(&[2, 1]))
            .mul(&p(&[2, 1]))
            .mul(&p(&[1, 2]));
        let sqf = f.square_free_decomposition();
        assert_eq!(sqf.len(), 3);
        assert_eq!(sqf[0], (p(&[1, 2]), 1));
        assert_eq!(sqf[1], (p(&[2, 1]), 2));
        assert_eq!(sqf[2], (p(&[-1, 1]), 3));
        let x2 = p(&[0, 0, 1]);
        assert_eq!(x2.square_free_decomposition(), vec![(p(&[0, 1]), 2)]);
    }

    #[test]
    fn exact_division_rejects_non_divisors() {
        assert_eq!(p(&[-1, 0, 1]).div_exact(&p(&[1, 1])), Some(p(&[-1, 1])));
        assert_eq!(p(&[-1, 0, 1]).div_exact(&p(&[2, 1])), None);
        assert_eq!(p(&[-1, 0, 4]).div_exact(&p(&[-1, 2])), Some(p(&[1, 2])));
    }

    #[test]
    fn root_multiplicity_counts() {
        let f = p(&[0, 0, 1]);
        assert_eq!(f.root_multiplicity(&BigRat::zero()), 2);
        let g = p(&[1, -4, 4]); // (2x-1)^2
        assert_eq!(g.root_multiplicity(&BigRat::new(1.into(), 2.into())), 2);
        assert_eq!(g.root_multiplicity(&BigRat::one()), 0);
    }

    /// Cofactor expansion, independent of the elimination routine.
    fn det_expansion(m: &[Vec<BigInt>]) -> BigInt {
        let n = m.len();
        if n == 1 {
            return m[0][0].clone();
        }
        let mut acc = BigInt::zero();
        for c in 0..n {
            if m[0][c].is_zero() {
                continue;
            }
            let minor: Vec<Vec<BigInt>> = m[1..]
                .iter()
                .map(|row| {
                    row.iter()
                        .enumerate()
                        .filter(|(j, _)| *j != c)
                        .map(|(_, v)| v.clone())
                        .collect()
                })
                .collect();
            let term = &m[0][c] * det_expansion(&minor);
            if c % 2 == 0 {
                acc += term;
            } else {
                acc -= term;
            }
        }
        acc
    }

    #[test]
    fn resultant_examples_match_sylvester_expansion() {
        // F = X^2, G = Y^2
        assert_eq!(resultant(&b(&[0, 0, 1]), &b(&[1, 0, 0]), 2).unwrap(), 1.into());
        // F = 2X^2
        assert_eq!(resultant(&b(&[0, 0, 2]), &b(&[1, 0, 0]), 2).unwrap(), 4.into());
        // F = X, G = X share the root [0:1]
        assert_eq!(resultant(&b(&[0, 1]), &b(&[0, 1]), 1).unwrap(), 0.into());
        // X^2 + Y^2 against Y^2
        assert_eq!(resultant(&b(&[1, 0, 1]), &b(&[1, 0, 0]), 2).unwrap(), 1.into());

        let f = b(&[3, -1, 4, 1]);
        let g = b(&[-5, 9, 2, 6]);
        let d = 3;
        let mut m = vec![vec![BigInt::zero(); 6]; 6];
        for i in 0..d {
            for j in 0..=d {
                m[i][i + j] = f[d - j].clone();
                m[d + i][i + j] = g[d - j].clone();
            }
        }
        assert_eq!(resultant(&f, &g, d).unwrap(), det_expansion(&m));
    }

    #[test]
    fn resultant_rejects_wrong_lengths() {
        let err = resultant(&b(&[1, 0]), &b(&[1, 0, 0]), 2).unwrap_err();
        assert!(matches!(err, Error::DegreeMismatch { .. }));
    }

    #[test]
    fn display_is_readable() {
        assert_eq!(p(&[-1, 0, 2]).to_string(), "2*x^2 - 1");
        assert_eq!(p(&[0, 1]).to_string(), "x");
    }
}
