use num_bigint::BigInt;
use num_complex::Complex64;
use num_traits::{ToPrimitive, Zero};

use super::{BigRat, IntPoly};
use crate::error::{Error, Result};

/// Relative residual accepted for a refined root of a square-free factor.
pub const DEFAULT_ROOT_RESIDUAL: f64 = 1e-10;

const MAX_ABERTH_ITERS: usize = 800;

/// Converts integer coefficients to doubles with a common power-of-two
/// scale so that huge coefficients do not overflow.
pub fn scaled_f64_coeffs(coeffs: &[BigInt]) -> Vec<f64> {
    let max_bits = coeffs.iter().map(|c| c.bits()).max().unwrap_or(0);
    let shift = max_bits.saturating_sub(960);
    coeffs
        .iter()
        .map(|c| {
            let s: BigInt = c >> shift;
            s.to_f64().unwrap_or(0.0)
        })
        .collect()
}

pub fn horner(coeffs: &[Complex64], z: Complex64) -> (Complex64, Complex64) {
    let mut p = Complex64::new(0.0, 0.0);
    let mut dp = Complex64::new(0.0, 0.0);
    for c in coeffs.iter().rev() {
        dp = dp * z + p;
        p = p * z + c;
    }
    (p, dp)
}

/// Relative residual `|p(z)| / sum |c_i| |z|^i`.
pub fn relative_residual(coeffs: &[Complex64], z: Complex64) -> f64 {
    let (p, _) = horner(coeffs, z);
    let r = z.norm();
    let mut scale = 0.0;
    for c in coeffs.iter().rev() {
        scale = scale * r + c.norm();
    }
    if scale == 0.0 {
        return 0.0;
    }
    p.norm() / scale
}

/// All roots of a complex polynomial (ascending coefficients) by the
/// Aberth-Ehrlich simultaneous iteration. Trailing zero coefficients must
/// already be removed; zero roots are split off exactly.
pub fn aberth(coeffs: &[Complex64]) -> Result<Vec<Complex64>> {
    let mut c: Vec<Complex64> = coeffs.to_vec();
    while c.last().is_some_and(|x| x.norm() == 0.0) {
        c.pop();
    }
    if c.len() < 2 {
        return Ok(Vec::new());
    }
    let mut roots = Vec::new();
    let zeros = c.iter().take_while(|x| x.norm() == 0.0).count();
    roots.extend(std::iter::repeat(Complex64::new(0.0, 0.0)).take(zeros));
    let c: Vec<Complex64> = c[zeros..].to_vec();
    let n = c.len() - 1;
    if n == 0 {
        return Ok(roots);
    }
    let lead = c[n];
    let monic: Vec<Complex64> = c.iter().map(|x| x / lead).collect();
    if n == 1 {
        roots.push(-monic[0]);
        return Ok(roots);
    }
    if n == 2 {
        roots.extend(quadratic_roots(monic[1], monic[0]));
        return Ok(roots);
    }

    // start on a circle through the geometric mean of the root moduli
    let r0 = monic[0].norm().powf(1.0 / n as f64).max(1e-300);
    let mut z: Vec<Complex64> = (0..n)
        .map(|k| Complex64::from_polar(r0, 0.4 + std::f64::consts::TAU * k as f64 / n as f64))
        .collect();
    let mut converged = false;
    for _ in 0..MAX_ABERTH_ITERS {
        let mut max_step: f64 = 0.0;
        for k in 0..n {
            let (p, dp) = horner(&monic, z[k]);
            if p.norm() == 0.0 {
                continue;
            }
            let ratio = p / dp;
            let mut s = Complex64::new(0.0, 0.0);
            for j in 0..n {
                if j != k {
                    let diff = z[k] - z[j];
                    if diff.norm() > 0.0 {
                        s += diff.inv();
                    }
                }
            }
            let mut w = ratio / (Complex64::new(1.0, 0.0) - ratio * s);
            if !w.re.is_finite() || !w.im.is_finite() {
                w = ratio;
            }
            z[k] -= w;
            max_step = max_step.max(w.norm() / z[k].norm().max(1e-300));
        }
        if max_step < 1e-15 {
            converged = true;
            break;
        }
    }
    if !converged {
        // stagnation at the rounding floor is acceptable; the caller checks
        // residuals
        let worst = z
            .iter()
            .map(|&zk| relative_residual(&monic, zk))
            .fold(0.0, f64::max);
        if !(worst < 1e-8) {
            return Err(Error::ConvergenceFailure(format!(
                "Aberth iteration stalled with residual {worst:e}"
            )));
        }
    }
    roots.extend(z);
    Ok(roots)
}

/// Roots of the monic quadratic `z^2 + b z + c` without cancellation.
fn quadratic_roots(b: Complex64, c: Complex64) -> [Complex64; 2] {
    let disc = (b * b - 4.0 * c).sqrt();
    let s1 = -b + disc;
    let s2 = -b - disc;
    let q = if s1.norm() >= s2.norm() { s1 } else { s2 } / 2.0;
    if q.norm() == 0.0 {
        return [Complex64::new(0.0, 0.0); 2];
    }
    [q, c / q]
}

fn newton_polish(coeffs: &[Complex64], mut z: Complex64) -> Complex64 {
    for _ in 0..3 {
        let (p, dp) = horner(coeffs, z);
        if dp.norm() == 0.0 {
            break;
        }
        let next = z - p / dp;
        if !(next.re.is_finite() && next.im.is_finite()) {
            break;
        }
        if relative_residual(coeffs, next) <= relative_residual(coeffs, z) {
            z = next;
        } else {
            break;
        }
    }
    z
}

/// Complex roots of `f` with exact multiplicities.
///
/// Multiplicities come from the square-free decomposition over Q; only the
/// root locations are numerical. Every root is accepted only if its relative
/// residual on its square-free factor is below `residual_tol`.
pub fn poly_roots_complex(f: &IntPoly, residual_tol: f64) -> Result<Vec<(Complex64, usize)>> {
    if f.degree().unwrap_or(0) == 0 {
        return Err(Error::InvalidArgument(
            "root finding needs degree >= 1".into(),
        ));
    }
    let mut out = Vec::new();
    for (g, mult) in f.square_free_decomposition() {
        for z in square_free_roots(&g, residual_tol)? {
            out.push((z, mult));
        }
    }
    Ok(out)
}

/// Roots of a square-free integer polynomial.
pub fn square_free_roots(g: &IntPoly, residual_tol: f64) -> Result<Vec<Complex64>> {
    let deg = g.degree().unwrap_or(0);
    if deg == 0 {
        return Ok(Vec::new());
    }
    if deg == 1 {
        let r = BigRat::new(-g.coeff(0), g.coeff(1));
        return Ok(vec![Complex64::new(rat_to_f64(&r), 0.0)]);
    }
    let cf: Vec<Complex64> = scaled_f64_coeffs(g.coeffs())
        .into_iter()
        .map(|x| Complex64::new(x, 0.0))
        .collect();
    let mut roots = aberth(&cf)?;
    for z in roots.iter_mut() {
        *z = newton_polish(&cf, *z);
        // real polynomial: snap negligible imaginary parts of real roots
        if z.im.abs() <= 1e-14 * z.re.abs() {
            let real = Complex64::new(z.re, 0.0);
            if relative_residual(&cf, real) <= relative_residual(&cf, *z) * 1.5 {
                *z = real;
            }
        }
        let res = relative_residual(&cf, *z);
        if !(res <= residual_tol) {
            return Err(Error::ConvergenceFailure(format!(
                "root {z} of {g} has residual {res:e} above {residual_tol:e}"
            )));
        }
    }
    Ok(roots)
}

pub fn rat_to_f64(q: &BigRat) -> f64 {
    if let Some(x) = q.to_f64() {
        if x.is_finite() && (x != 0.0 || q.is_zero()) {
            return x;
        }
    }
    let ln = super::ln_abs_big(q.numer()) - super::ln_abs_big(q.denom());
    let sign = if q.numer() < &BigInt::zero() { -1.0 } else { 1.0 };
    sign * ln.exp()
}

/// Continued-fraction convergents of a double.
pub fn convergents(x: f64, max_terms: usize) -> Vec<BigRat> {
    let mut out = Vec::new();
    if !x.is_finite() {
        return out;
    }
    let (mut h0, mut h1) = (BigInt::from(0), BigInt::from(1));
    let (mut k0, mut k1) = (BigInt::from(1), BigInt::from(0));
    let mut y = x;
    for _ in 0..max_terms {
        let a = y.floor();
        if a.abs() > 1e18 {
            break;
        }
        let ai = BigInt::from(a as i64);
        let h2 = &ai * &h1 + &h0;
        let k2 = &ai * &k1 + &k0;
        out.push(BigRat::new(h2.clone(), k2.clone()));
        h0 = h1;
        h1 = h2;
        k0 = k1;
        k1 = k2;
        let frac = y - a;
        if frac.abs() < 1e-12 {
            break;
        }
        y = 1.0 / frac;
    }
    out
}

/// Rational roots of `f` with multiplicities, found exactly.
///
/// Linear square-free factors give their root directly; for higher-degree
/// factors every numerically real root is rationalized by continued
/// fractions and confirmed by exact evaluation.
pub fn rational_roots(f: &IntPoly) -> Result<Vec<(BigRat, usize)>> {
    let mut out = Vec::new();
    for (g, mult) in f.square_free_decomposition() {
        if g.degree() == Some(1) {
            out.push((BigRat::new(-g.coeff(0), g.coeff(1)), mult));
            continue;
        }
        if g.degree() == Some(2) {
            if let Some(rs) = quadratic_rational_roots(&g) {
                out.extend(rs.into_iter().map(|r| (r, mult)));
            }
            continue;
        }
        for z in square_free_roots(&g, 1e-6)? {
            if z.im.abs() > 1e-6 * z.re.abs().max(1.0) {
                continue;
            }
            for cand in convergents(z.re, 40) {
                // an earlier convergent may be a different root of `g`
                if (rat_to_f64(&cand) - z.re).abs() > 1e-6 * z.re.abs().max(1.0) {
                    continue;
                }
                if g.eval_homogeneous(cand.numer(), cand.denom()).is_zero() {
                    if !out.iter().any(|(r, _)| r == &cand) {
                        out.push((cand, mult));
                    }
                    break;
                }
            }
        }
    }
    Ok(out)
}

/// Roots of `f` split into exact rational roots and numeric irrational
/// ones, each with its exact multiplicity.
pub fn exact_and_numeric_roots(
    f: &IntPoly,
    residual_tol: f64,
) -> Result<(Vec<(BigRat, usize)>, Vec<(Complex64, usize)>)> {
    let mut exact = Vec::new();
    let mut numeric = Vec::new();
    for (g, mult) in f.square_free_decomposition() {
        let mut rest = g.clone();
        for (r, _) in rational_roots(&g)? {
            rest = rest
                .div_exact(&IntPoly::linear_root(&r))
                .expect("a verified rational root divides its factor");
            exact.push((r, mult));
        }
        if rest.degree().unwrap_or(0) > 0 {
            numeric.extend(square_free_roots(&rest, residual_tol)?.into_iter().map(|z| (z, mult)));
        }
    }
    Ok((exact, numeric))
}

/// Both roots of an integer quadratic when its discriminant is a square.
pub fn quadratic_rational_roots(g: &IntPoly) -> Option<Vec<BigRat>> {
    let (c, b, a) = (g.coeff(0), g.coeff(1), g.coeff(2));
    let disc = &b * &b - BigInt::from(4) * &a * &c;
    if disc < BigInt::zero() {
        return None;
    }
    let s = disc.sqrt();
    if &s * &s != disc {
        return None;
    }
    let two_a = BigInt::from(2) * &a;
    let mut r = vec![
        BigRat::new(-&b + &s, two_a.clone()),
        BigRat::new(-&b - &s, two_a),
    ];
    r.dedup();
    Some(r)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn p(c: &[i64]) -> IntPoly {
        IntPoly::from_i64(c)
    }

    fn sorted(mut v: Vec<(Complex64, usize)>) -> Vec<(Complex64, usize)> {
        v.sort_by(|a, b| a.0.re.partial_cmp(&b.0.re).unwrap());
        v
    }

    #[test]
    fn roots_of_small_examples() {
        let r = sorted(poly_roots_complex(&p(&[-1, 0, 1]), DEFAULT_ROOT_RESIDUAL).unwrap());
        assert_eq!(r.len(), 2);
        assert!((r[0].0.re + 1.0).abs() < 1e-14 && r[0].1 == 1);
        assert!((r[1].0.re - 1.0).abs() < 1e-14 && r[1].1 == 1);

        let r = poly_roots_complex(&p(&[0, 0, 1]), DEFAULT_ROOT_RESIDUAL).unwrap();
        assert_eq!(r.len(), 1);
        assert_eq!(r[0].1, 2);
        assert!(r[0].0.norm() < 1e-15);
    }

    #[test]
    fn half_sqrt_two_matches_newton_oracle() {
        // independent Newton iteration on 2x^2 - 1 from x = 1
        let mut x: f64 = 1.0;
        for _ in 0..60 {
            x -= (2.0 * x * x - 1.0) / (4.0 * x);
        }
        let r = sorted(poly_roots_complex(&p(&[-1, 0, 2]), DEFAULT_ROOT_RESIDUAL).unwrap());
        assert!((r[1].0.re - x).abs() < 1e-15);
        assert!((r[0].0.re + x).abs() < 1e-15);
        assert!((x - 0.707_106_781_186_547_5).abs() < 1e-15);
    }

    #[test]
    fn multiplicities_sum_to_degree() {
        // (x^2 + 1)^2 (x - 3)^3 (5x + 2)
        let f = p(&[1, 0, 1])
            .mul(&p(&[1, 0, 1]))
            .mul(&p(&[-3, 1]))
            .mul(&p(&[-3, 1]))
            .mul(&p(&[-3, 1]))
            .mul(&p(&[2, 5]));
        let r = poly_roots_complex(&f, DEFAULT_ROOT_RESIDUAL).unwrap();
        assert_eq!(r.iter().map(|x| x.1).sum::<usize>(), 8);
        let i_root = r.iter().find(|(z, _)| (z - Complex64::new(0.0, 1.0)).norm() < 1e-10);
        assert_eq!(i_root.unwrap().1, 2);
    }

    #[test]
    fn rational_roots_are_exact() {
        // (3x - 2)^2 (x^3 - 2)
        let f = p(&[-2, 3]).mul(&p(&[-2, 3])).mul(&p(&[-2, 0, 0, 1]));
        let rr = rational_roots(&f).unwrap();
        assert_eq!(rr, vec![(BigRat::new(2.into(), 3.into()), 2)]);
        let f = p(&[6, -5, 1]).mul(&p(&[1, 0, 0, 0, 1])).mul(&p(&[-7, 4]));
        let mut rr: Vec<_> = rational_roots(&f).unwrap().into_iter().map(|x| x.0).collect();
        rr.sort();
        assert_eq!(
            rr,
            vec![
                BigRat::new(7.into(), 4.into()),
                BigRat::from_integer(2.into()),
                BigRat::from_integer(3.into())
            ]
        );
    }

    #[test]
    fn exact_and_numeric_split() {
        // (2x - 1)^2 (x^2 - 2)
        let f = p(&[-1, 2]).mul(&p(&[-1, 2])).mul(&p(&[-2, 0, 1]));
        let (ex, num) = exact_and_numeric_roots(&f, DEFAULT_ROOT_RESIDUAL).unwrap();
        assert_eq!(ex, vec![(BigRat::new(1.into(), 2.into()), 2)]);
        assert_eq!(num.len(), 2);
        for (z, m) in num {
            assert_eq!(m, 1);
            assert!((z.re.abs() - 2f64.sqrt()).abs() < 1e-14);
        }
    }

    #[test]
    fn convergents_recover_fractions() {
        let c = convergents(355.0 / 113.0, 20);
        assert!(c.contains(&BigRat::new(355.into(), 113.into())));
    }

    proptest! {
        #[test]
        fn square_free_part_vanishes_at_roots(coeffs in proptest::collection::vec(-20i64..20, 2..7)) {
            let f = p(&coeffs);
            prop_assume!(f.degree().unwrap_or(0) >= 1);
            let roots = poly_roots_complex(&f, DEFAULT_ROOT_RESIDUAL).unwrap();
            prop_assert_eq!(roots.iter().map(|r| r.1).sum::<usize>(), f.degree().unwrap());
            let sqf: IntPoly = f
                .square_free_decomposition()
                .into_iter()
                .fold(IntPoly::one(), |acc, (g, _)| acc.mul(&g));
            let cf: Vec<Complex64> = sqf.coeffs().iter().map(|c| Complex64::new(c.to_f64().unwrap(), 0.0)).collect();
            for (z, _) in roots {
                prop_assert!(relative_residual(&cf, z) < 1e-10);
            }
        }
    }
}
