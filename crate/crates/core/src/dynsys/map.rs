use std::sync::OnceLock;

use num_bigint::{BigInt, BigUint};
use num_complex::Complex64;
use num_integer::Integer;
use num_traits::{One, Signed, Zero};

use crate::error::{Error, Result};
use crate::exactnum::{
    aberth, exact_and_numeric_roots, factor_int, poly_roots_complex, resultant,
    scaled_f64_coeffs, BigRat, IntPoly, LogPoint, ProjPointQ, DEFAULT_FACTOR_BITS,
    DEFAULT_ROOT_RESIDUAL,
};

/// Chordal tolerance used to identify a numerically computed preimage with
/// a critical point.
pub const CRITICAL_MATCH_TOL: f64 = 1e-7;

/// A rational map `[F(X,Y) : G(X,Y)]` of degree `d >= 2` over Q.
///
/// Forms are stored as [`IntPoly`] in the affine variable: coefficient `i`
/// multiplies `X^i Y^(d-i)`. The pair is primitive (no common integer
/// factor) and has nonzero resultant.
#[derive(Debug, Clone)]
pub struct RationalMapQ {
    f: IntPoly,
    g: IntPoly,
    degree: usize,
    res: BigInt,
    f_num: Vec<f64>,
    g_num: Vec<f64>,
    /// `ln` of the power of two removed from the coefficients in `f_num`, `g_num`.
    ln_scale: f64,
    critical: OnceLock<Vec<(LogPoint, usize)>>,
}

impl PartialEq for RationalMapQ {
    fn eq(&self, other: &Self) -> bool {
        self.f == other.f && self.g == other.g && self.degree == other.degree
    }
}

/// `a z^d` or, when `inverted`, `a z^(-d)`.
#[derive(Debug, Clone, PartialEq)]
pub struct Monomial {
    pub coeff: BigRat,
    pub degree: usize,
    pub inverted: bool,
}

/// One preimage of an exact point.
#[derive(Debug, Clone, PartialEq)]
pub struct Preimage {
    pub point: LogPoint,
    /// Present when the preimage is rational.
    pub exact: Option<ProjPointQ>,
    pub mult: usize,
}

/// Builds `num(z)/den(z)` as a map of degree `max(deg num, deg den)`.
pub fn make_map(num: &IntPoly, den: &IntPoly) -> Result<RationalMapQ> {
    if num.is_zero() || den.is_zero() {
        return Err(Error::DegenerateMap);
    }
    if num.gcd(den).degree().unwrap_or(0) > 0 {
        return Err(Error::CommonFactor);
    }
    let d = num.degree().unwrap().max(den.degree().unwrap());
    RationalMapQ::from_forms(num.clone(), den.clone(), d)
}

/// `sum_i c_i a^i b^(d-i)`.
fn form_eval(c: &IntPoly, d: usize, a: &BigInt, b: &BigInt) -> BigInt {
    let mut acc = BigInt::zero();
    let mut bpow = BigInt::one();
    for i in (0..=d).rev() {
        acc = acc * a + c.coeff(i) * &bpow;
        bpow *= b;
    }
    acc
}

fn form_eval_c(c: &[f64], x: Complex64, y: Complex64) -> Complex64 {
    let mut acc = Complex64::new(0.0, 0.0);
    let mut ypow = Complex64::new(1.0, 0.0);
    for ci in c.iter().rev() {
        acc = acc * x + ypow * ci;
        ypow *= y;
    }
    acc
}

fn padded(c: &IntPoly, d: usize) -> Vec<BigInt> {
    (0..=d).map(|i| c.coeff(i)).collect()
}

impl RationalMapQ {
    /// Builds a map from homogeneous forms of degree `d`.
    pub fn from_forms(f: IntPoly, g: IntPoly, d: usize) -> Result<Self> {
        if f.is_zero() || g.is_zero() {
            return Err(Error::DegenerateMap);
        }
        let found = f.degree().unwrap().max(g.degree().unwrap());
        if found > d {
            return Err(Error::DegreeMismatch { expected: d, found });
        }
        if d < 2 {
            return Err(Error::DegreeTooLow(d));
        }
        let content = f.content().gcd(&g.content());
        let (f, g) = if content.is_one() {
            (f, g)
        } else {
            (
                IntPoly::new(f.coeffs().iter().map(|c| c / &content).collect()),
                IntPoly::new(g.coeffs().iter().map(|c| c / &content).collect()),
            )
        };
        let res = resultant(&padded(&f, d), &padded(&g, d), d)?;
        if res.is_zero() {
            return Err(Error::DegenerateMap);
        }
        let mut all = padded(&f, d);
        all.extend(padded(&g, d));
        let max_bits = all.iter().map(|c| c.bits()).max().unwrap_or(0);
        let shift = max_bits.saturating_sub(960);
        let scaled = scaled_f64_coeffs(&all);
        Ok(Self {
            f_num: scaled[..=d].to_vec(),
            g_num: scaled[d + 1..].to_vec(),
            ln_scale: shift as f64 * std::f64::consts::LN_2,
            f,
            g,
            degree: d,
            res,
            critical: OnceLock::new(),
        })
    }

    pub fn degree(&self) -> usize {
        self.degree
    }

    /// Coefficients of `F`, index `i` multiplying `X^i Y^(d-i)`.
    pub fn f_coeffs(&self) -> Vec<BigInt> {
        padded(&self.f, self.degree)
    }

    pub fn g_coeffs(&self) -> Vec<BigInt> {
        padded(&self.g, self.degree)
    }

    pub fn f_poly(&self) -> &IntPoly {
        &self.f
    }

    pub fn g_poly(&self) -> &IntPoly {
        &self.g
    }

    pub fn resultant(&self) -> &BigInt {
        &self.res
    }

    pub fn eval(&self, p: &ProjPointQ) -> ProjPointQ {
        let d = self.degree;
        let fa = form_eval(&self.f, d, p.a(), p.b());
        let ga = form_eval(&self.g, d, p.a(), p.b());
        // For coprime (a, b) the common factor of F(a, b) and G(a, b)
        // divides the resultant, so it is found among small numbers.
        // Reduce before each gcd: binary gcd is slow on unbalanced operands.
        let r = (&fa % &self.res).gcd(&self.res);
        let common = if r.is_one() { r } else { (&ga % &r).gcd(&r) };
        if common.is_one() {
            ProjPointQ::from_coprime(fa, ga)
        } else {
            ProjPointQ::from_coprime(fa / &common, ga / &common)
        }
    }

    /// Like [`RationalMapQ::eval`], but refuses to build coordinates longer
    /// than `budget_bits`.
    pub fn eval_checked(&self, p: &ProjPointQ, budget_bits: u64) -> Result<ProjPointQ> {
        let coeff_bits = self
            .f
            .coeffs()
            .iter()
            .chain(self.g.coeffs())
            .map(|c| c.bits())
            .max()
            .unwrap_or(0);
        let estimate = coeff_bits + self.degree as u64 * p.bits() + 64;
        if estimate > budget_bits {
            return Err(Error::IntegerOverflowBudget {
                budget: budget_bits,
            });
        }
        Ok(self.eval(p))
    }

    /// Applies `(F, G)` to homogeneous coordinates and renormalizes to max
    /// norm 1, returning the new pair and `ln max(|F|, |G|)`.
    pub fn apply_homogeneous(&self, x: Complex64, y: Complex64) -> (Complex64, Complex64, f64) {
        let fx = form_eval_c(&self.f_num, x, y);
        let gx = form_eval_c(&self.g_num, x, y);
        let m = fx.norm().max(gx.norm());
        (fx / m, gx / m, m.ln() + self.ln_scale)
    }

    /// Local potential `(1/d) ln max(|F(z,1)|, |G(z,1)|) - ln+|z|`.
    pub fn local_green(&self, z: LogPoint) -> f64 {
        let (x, y) = z.homogeneous();
        let (_, _, lnm) = self.apply_homogeneous(x, y);
        lnm / self.degree as f64
    }

    pub fn eval_log(&self, z: LogPoint) -> LogPoint {
        if let Some(m) = self.monomial() {
            return m.eval_log(z);
        }
        let (x, y) = z.homogeneous();
        let (fx, gy, _) = self.apply_homogeneous(x, y);
        LogPoint::from_homogeneous(fx, gy)
    }

    pub fn monomial(&self) -> Option<Monomial> {
        let d = self.degree;
        let single = |p: &IntPoly| -> Option<usize> {
            let nz: Vec<usize> = (0..=d).filter(|&i| !p.coeff(i).is_zero()).collect();
            (nz.len() == 1).then(|| nz[0])
        };
        let (i, j) = (single(&self.f)?, single(&self.g)?);
        let coeff = BigRat::new(self.f.coeff(i), self.g.coeff(j));
        match (i, j) {
            (i, 0) if i == d => Some(Monomial {
                coeff,
                degree: d,
                inverted: false,
            }),
            (0, j) if j == d => Some(Monomial {
                coeff,
                degree: d,
                inverted: true,
            }),
            _ => None,
        }
    }

    /// Exact ramification index `e_P`, the multiplicity of `P` as a root of
    /// `F(X,Y) G(a,b) - G(X,Y) F(a,b)`.
    pub fn ramification_index(&self, p: &ProjPointQ) -> usize {
        let d = self.degree;
        let fa = form_eval(&self.f, d, p.a(), p.b());
        let ga = form_eval(&self.g, d, p.a(), p.b());
        let h = self.f.scale(&ga).sub(&self.g.scale(&fa));
        match p.to_rat() {
            None => d - h.degree().expect("fibre polynomial is nonzero"),
            Some(r) => h.root_multiplicity(&r),
        }
    }

    /// Jacobian form `F_X G_Y - F_Y G_X` of degree `2d - 2`; its root
    /// multiplicity at `w` is `e_w - 1`.
    pub fn jacobian(&self) -> IntPoly {
        let d = self.degree;
        let dx = |p: &IntPoly| -> IntPoly {
            IntPoly::new((1..=d).map(|i| p.coeff(i) * BigInt::from(i)).collect())
        };
        let dy = |p: &IntPoly| -> IntPoly {
            IntPoly::new((0..d).map(|i| p.coeff(i) * BigInt::from(d - i)).collect())
        };
        dx(&self.f).mul(&dy(&self.g)).sub(&dy(&self.f).mul(&dx(&self.g)))
    }

    /// Critical points with multiplicity `e - 1`, summing to `2d - 2`.
    pub fn critical_points(&self) -> &[(LogPoint, usize)] {
        self.critical.get_or_init(|| {
            let total = 2 * self.degree - 2;
            if let Some(m) = self.monomial() {
                return vec![
                    (LogPoint::ZERO, m.degree - 1),
                    (LogPoint::INFINITY, m.degree - 1),
                ];
            }
            let j = self.jacobian();
            let jd = j.degree().expect("jacobian of a nondegenerate map is nonzero");
            let mut out = Vec::new();
            if jd > 0 {
                let roots = poly_roots_complex(&j, 1e-6)
                    .expect("critical points of a small integer form");
                out.extend(roots.into_iter().map(|(z, m)| (LogPoint::from_complex(z), m)));
            }
            if total > jd {
                out.push((LogPoint::INFINITY, total - jd));
            }
            out
        })
    }

    /// Ramification index at a numerically given point, read off the
    /// critical points within [`CRITICAL_MATCH_TOL`].
    pub fn ramification_numeric(&self, w: LogPoint) -> usize {
        self.critical_points()
            .iter()
            .find(|(c, _)| c.chordal_distance(&w) < CRITICAL_MATCH_TOL)
            .map_or(1, |(_, m)| m + 1)
    }

    /// Preimages of a numeric point with ramification multiplicities.
    pub fn preimages_log(&self, z: LogPoint) -> Result<Vec<(LogPoint, usize)>> {
        if let Some(m) = self.monomial() {
            return Ok(m.preimages_log(z));
        }
        let d = self.degree;
        let (x, y) = z.homogeneous();
        // y F(w) - x G(w), with max(|x|, |y|) = 1
        let mut c: Vec<Complex64> = (0..=d)
            .map(|i| y * self.f_num[i] - x * self.g_num[i])
            .collect();
        let mut at_infinity = 0;
        while c.last().is_some_and(|v| v.norm() == 0.0) {
            c.pop();
            at_infinity += 1;
        }
        let mut roots: Vec<(LogPoint, usize)> = aberth(&c)?
            .into_iter()
            .map(|w| (LogPoint::from_complex(w), 1))
            .collect();
        if at_infinity > 0 {
            roots.push((LogPoint::INFINITY, at_infinity));
        }
        // merge root clusters at critical preimages into one point of
        // multiplicity e
        for &(crit, m) in self.critical_points() {
            let e = m + 1;
            if self.eval_log(crit).chordal_distance(&z) > CRITICAL_MATCH_TOL.sqrt() {
                continue;
            }
            roots.sort_by(|a, b| {
                a.0.chordal_distance(&crit)
                    .total_cmp(&b.0.chordal_distance(&crit))
            });
            let mut taken = 0;
            let mut k = 0;
            while taken < e && k < roots.len() {
                taken += roots[k].1;
                k += 1;
            }
            if taken != e {
                continue;
            }
            roots.drain(..k);
            roots.push((crit, e));
        }
        Ok(roots)
    }

    /// Exact preimages of a rational point: rational ones exactly, the
    /// rest numerically, with exact multiplicities.
    pub fn preimages_exact(&self, p: &ProjPointQ) -> Result<Vec<Preimage>> {
        let h = self.f.scale(p.b()).sub(&self.g.scale(p.a()));
        let hd = h.degree().expect("fibre polynomial is nonzero");
        let mut out = Vec::new();
        if hd > 0 {
            let (exact, numeric) = exact_and_numeric_roots(&h, DEFAULT_ROOT_RESIDUAL * 100.0)?;
            for (r, mult) in exact {
                let q = ProjPointQ::from_rat(&r);
                out.push(Preimage {
                    point: q.to_log_point(),
                    exact: Some(q),
                    mult,
                });
            }
            for (z, mult) in numeric {
                out.push(Preimage {
                    point: LogPoint::from_complex(z),
                    exact: None,
                    mult,
                });
            }
        }
        if self.degree > hd {
            out.push(Preimage {
                point: LogPoint::INFINITY,
                exact: Some(ProjPointQ::infinity()),
                mult: self.degree - hd,
            });
        }
        Ok(out)
    }

    /// Primes dividing the resultant: the places of bad reduction.
    pub fn bad_primes(&self) -> Result<Vec<BigUint>> {
        self.bad_primes_with_budget(DEFAULT_FACTOR_BITS)
    }

    pub fn bad_primes_with_budget(&self, max_bits: u64) -> Result<Vec<BigUint>> {
        Ok(factor_int(&self.res, max_bits)?.into_keys().collect())
    }

    /// Human-readable `num / den` in the affine variable `z`.
    pub fn describe(&self) -> String {
        let z = |p: &IntPoly| p.to_string().replace('x', "z");
        if self.g.degree() == Some(0) && self.g.coeff(0).is_one() {
            z(&self.f)
        } else {
            format!("({}) / ({})", z(&self.f), z(&self.g))
        }
    }
}

impl Monomial {
    fn ln_abs_coeff(&self) -> f64 {
        crate::exactnum::ln_abs_big(self.coeff.numer()) - crate::exactnum::ln_abs_big(self.coeff.denom())
    }

    fn coeff_arg(&self) -> f64 {
        if self.coeff.is_negative() {
            std::f64::consts::PI
        } else {
            0.0
        }
    }

    pub fn eval_log(&self, z: LogPoint) -> LogPoint {
        let d = self.degree as f64;
        let (la, aa) = (self.ln_abs_coeff(), self.coeff_arg());
        if self.inverted {
            if z.is_zero() {
                return LogPoint::INFINITY;
            }
            if z.is_infinity() {
                return LogPoint::ZERO;
            }
            LogPoint::new(la - d * z.log_abs, aa - d * z.arg)
        } else {
            if z.is_zero() || z.is_infinity() {
                return z;
            }
            LogPoint::new(la + d * z.log_abs, aa + d * z.arg)
        }
    }

    /// The `d` preimages of `z` in closed form.
    pub fn preimages_log(&self, z: LogPoint) -> Vec<(LogPoint, usize)> {
        let d = self.degree;
        if z.is_zero() || z.is_infinity() {
            let w = if z.is_zero() != self.inverted {
                LogPoint::ZERO
            } else {
                LogPoint::INFINITY
            };
            return vec![(w, d)];
        }
        (0..d).map(|k| (self.preimage_branch(z, k), 1)).collect()
    }

    /// Branch `k` of the `d`-th root solving `phi(w) = z` for finite nonzero `z`.
    pub fn preimage_branch(&self, z: LogPoint, k: usize) -> LogPoint {
        let d = self.degree as f64;
        let (la, aa) = (self.ln_abs_coeff(), self.coeff_arg());
        let turn = std::f64::consts::TAU * k as f64;
        if self.inverted {
            LogPoint::new((la - z.log_abs) / d, (aa - z.arg + turn) / d)
        } else {
            LogPoint::new((z.log_abs - la) / d, (z.arg - aa + turn) / d)
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn p(c: &[i64]) -> IntPoly {
        IntPoly::from_i64(c)
    }

    fn q(s: &str) -> ProjPointQ {
        s.parse().unwrap()
    }

    #[test]
    fn make_map_examples() {
        let m = make_map(&p(&[0, 0, 1]), &p(&[1])).unwrap();
        assert_eq!(m.f_coeffs(), vec![0.into(), 0.into(), 1.into()]);
        assert_eq!(m.g_coeffs(), vec![1.into(), 0.into(), 0.into()]);
        assert_eq!(m.degree(), 2);
        let m = make_map(&p(&[0, 0, 2]), &p(&[1])).unwrap();
        assert_eq!(m.f_coeffs()[2], 2.into());
        assert_eq!(*m.resultant(), 4.into());
        let m = make_map(&p(&[1, 0, 1]), &p(&[1])).unwrap();
        assert_eq!(m.f_coeffs(), vec![1.into(), 0.into(), 1.into()]);
        assert_eq!(*m.resultant(), 1.into());
    }

    #[test]
    fn make_map_errors() {
        assert_eq!(make_map(&p(&[0, 1]), &p(&[1])).unwrap_err(), Error::DegreeTooLow(1));
        assert_eq!(
            make_map(&p(&[0, 0, 1]), &p(&[0, 1])).unwrap_err(),
            Error::CommonFactor
        );
        assert_eq!(make_map(&p(&[]), &p(&[1])).unwrap_err(), Error::DegenerateMap);
        // integer content is removed
        let m = make_map(&p(&[0, 0, 4]), &p(&[2])).unwrap();
        assert_eq!(m, make_map(&p(&[0, 0, 2]), &p(&[1])).unwrap());
    }

    #[test]
    fn eval_examples() {
        let sq = make_map(&p(&[0, 0, 1]), &p(&[1])).unwrap();
        assert_eq!(sq.eval(&q("3/2")), q("9/4"));
        assert_eq!(sq.eval(&q("inf")), q("inf"));
        let two = make_map(&p(&[0, 0, 2]), &p(&[1])).unwrap();
        assert_eq!(two.eval(&q("1")), q("2"));
        let inv = make_map(&p(&[1]), &p(&[0, 0, 1])).unwrap();
        assert_eq!(inv.eval(&q("0")), q("inf"));
        assert_eq!(inv.eval(&q("inf")), q("0"));
        assert!(matches!(
            sq.eval_checked(&q("3"), 8),
            Err(Error::IntegerOverflowBudget { budget: 8 })
        ));
    }

    #[test]
    fn ramification_examples() {
        let sq = make_map(&p(&[0, 0, 1]), &p(&[1])).unwrap();
        assert_eq!(sq.ramification_index(&q("0")), 2);
        assert_eq!(sq.ramification_index(&q("1")), 1);
        assert_eq!(sq.ramification_index(&q("inf")), 2);
        let inv = make_map(&p(&[1]), &p(&[0, 0, 1])).unwrap();
        assert_eq!(inv.ramification_index(&q("inf")), 2);
        // z^3 - 3z has critical points +-1, simple
        let c = make_map(&p(&[0, -3, 0, 1]), &p(&[1])).unwrap();
        assert_eq!(c.ramification_index(&q("1")), 2);
        assert_eq!(c.ramification_index(&q("2")), 1);
    }

    #[test]
    fn jacobian_matches_ramification() {
        let c = make_map(&p(&[1, 0, 1]), &p(&[0, 1, 0, 3])).unwrap();
        let j = c.jacobian();
        for s in ["0", "1", "-1", "1/3", "2", "inf"] {
            let pt = q(s);
            let mult = match pt.to_rat() {
                Some(r) => j.root_multiplicity(&r),
                None => 2 * c.degree() - 2 - j.degree().unwrap(),
            };
            assert_eq!(c.ramification_index(&pt), mult + 1, "at {s}");
        }
    }

    #[test]
    fn bad_primes_examples() {
        let sq = make_map(&p(&[0, 0, 1]), &p(&[1])).unwrap();
        assert!(sq.bad_primes().unwrap().is_empty());
        let two = make_map(&p(&[0, 0, 2]), &p(&[1])).unwrap();
        assert_eq!(two.bad_primes().unwrap(), vec![BigUint::from(2u32)]);
        let c = make_map(&p(&[1, 0, 1]), &p(&[1])).unwrap();
        assert!(c.bad_primes().unwrap().is_empty());
    }

    #[test]
    fn preimage_examples() {
        let sq = make_map(&p(&[0, 0, 1]), &p(&[1])).unwrap();
        let pre = sq.preimages_exact(&q("4")).unwrap();
        let mut pts: Vec<ProjPointQ> = pre.iter().map(|x| x.exact.clone().unwrap()).collect();
        pts.sort();
        assert_eq!(pts, vec![q("-2"), q("2")]);
        let pre = sq.preimages_exact(&q("0")).unwrap();
        assert_eq!(pre.len(), 1);
        assert_eq!(pre[0].mult, 2);
        let two = make_map(&p(&[0, 0, 2]), &p(&[1])).unwrap();
        let pre = two.preimages_exact(&q("1")).unwrap();
        assert!(pre.iter().all(|x| x.exact.is_none() && x.mult == 1));
        for x in &pre {
            assert!((x.point.abs() - 0.5f64.sqrt()).abs() < 1e-15);
        }
        let inv = make_map(&p(&[1]), &p(&[0, 0, 1])).unwrap();
        let pre = inv.preimages_exact(&q("inf")).unwrap();
        assert_eq!(pre[0].exact, Some(q("0")));
        assert_eq!(pre[0].mult, 2);
    }

    #[test]
    fn numeric_preimages_of_general_map() {
        // z^2 + 1: the critical value 1 has the double preimage 0
        let c = make_map(&p(&[1, 0, 1]), &p(&[1])).unwrap();
        let pre = c.preimages_log(LogPoint::new(0.0, 0.0)).unwrap();
        assert_eq!(pre.len(), 1);
        assert_eq!(pre[0].1, 2);
        assert!(pre[0].0.abs() < 1e-7);
        let pre = c.preimages_log(LogPoint::INFINITY).unwrap();
        assert_eq!(pre, vec![(LogPoint::INFINITY, 2)]);
        let z = LogPoint::from_complex(Complex64::new(3.0, 1.0));
        let pre = c.preimages_log(z).unwrap();
        assert_eq!(pre.len(), 2);
        for (w, m) in pre {
            assert_eq!(m, 1);
            assert!(c.eval_log(w).chordal_distance(&z) < 1e-13);
        }
    }

    proptest! {
        #[test]
        fn fibre_multiplicities_sum_to_degree(
            num in proptest::collection::vec(-6i64..6, 1..5),
            den in proptest::collection::vec(-6i64..6, 1..5),
            a in -20i64..20, b in 0i64..6,
        ) {
            let Ok(m) = make_map(&p(&num), &p(&den)) else { return Ok(()); };
            let Ok(pt) = ProjPointQ::new(a, b) else { return Ok(()); };
            let pre = m.preimages_exact(&pt).unwrap();
            prop_assert_eq!(pre.iter().map(|x| x.mult).sum::<usize>(), m.degree());
            for x in &pre {
                prop_assert!(x.mult >= 1 && x.mult <= m.degree());
                if let Some(e) = &x.exact {
                    prop_assert_eq!(m.ramification_index(e), x.mult);
                    prop_assert_eq!(&m.eval(e), &pt);
                }
            }
        }
    }
}
