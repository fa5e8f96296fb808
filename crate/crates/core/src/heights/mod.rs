//! Weil heights, local heights, heights of discrete measures, local energy
//! pairings and the per-map potential bounds `C_phi`.
//!
//! Places of Q are the archimedean absolute value and one p-adic absolute
//! value per prime, each with weight 1, so every global quantity below is a
//! finite sum over places.

mod cphi;
mod measure;

use std::fmt;
use std::str::FromStr;

use num_bigint::BigInt;
use num_traits::{Signed, Zero};

use crate::error::{Error, Result};
use crate::exactnum::{
    is_prime_u64, ln_abs_big, padic_valuation, poly_roots_complex, rational_roots, BigRat,
    IntPoly, ProjPointQ, DEFAULT_ROOT_RESIDUAL,
};

pub use cphi::{cphi_bound, l1_height_control_total, system_cphi_at, CphiBound, L1Control};
pub use measure::{
    energy_pairing_discrete, measure_height, measure_height_exact, product_formula_sum,
    standard_energy_defect, DiscreteMeasure,
};

/// A place of Q.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum PlaceQ {
    Arch,
    Prime(u64),
}

impl PlaceQ {
    pub fn prime(p: u64) -> Result<Self> {
        if is_prime_u64(p) {
            Ok(PlaceQ::Prime(p))
        } else {
            Err(Error::InvalidArgument(format!("{p} is not prime")))
        }
    }

    /// `ln |x|_v` for a nonzero rational.
    pub fn ln_abs(&self, x: &BigRat) -> f64 {
        match *self {
            PlaceQ::Arch => ln_abs_big(x.numer()) - ln_abs_big(x.denom()),
            PlaceQ::Prime(p) => {
                -(padic_valuation(x, p).expect("nonzero argument") as f64) * (p as f64).ln()
            }
        }
    }
}

impl fmt::Display for PlaceQ {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            PlaceQ::Arch => write!(f, "arch"),
            PlaceQ::Prime(p) => write!(f, "{p}"),
        }
    }
}

impl FromStr for PlaceQ {
    type Err = Error;

    /// `"arch"` (or `"inf"`) for the archimedean place, otherwise a prime.
    fn from_str(s: &str) -> Result<Self> {
        let s = s.trim();
        if s.eq_ignore_ascii_case("arch") || s.eq_ignore_ascii_case("inf") {
            return Ok(PlaceQ::Arch);
        }
        let p: u64 = s
            .strip_prefix("p=")
            .unwrap_or(s)
            .parse()
            .map_err(|_| Error::InvalidArgument(format!("cannot parse place {s:?}")))?;
        PlaceQ::prime(p)
    }
}

/// Absolute logarithmic Weil height `ln max(|a|, |b|)` of a normalized point.
pub fn weil_height(p: &ProjPointQ) -> f64 {
    ln_abs_big(p.a()).max(ln_abs_big(p.b()))
}

/// `ln+ |a/b|_v`; the point at infinity is rejected.
pub fn local_height(p: &ProjPointQ, v: PlaceQ) -> Result<f64> {
    if p.is_infinity() {
        return Err(Error::InfinitePoint);
    }
    Ok(match v {
        PlaceQ::Arch => (ln_abs_big(p.a()) - ln_abs_big(p.b())).max(0.0),
        PlaceQ::Prime(q) => {
            let vb = crate::exactnum::valuation_int(p.b(), q).unwrap_or(0);
            vb as f64 * (q as f64).ln()
        }
    })
}

/// Height of an algebraic number given by its minimal polynomial:
/// `(ln |lead| + sum over roots of ln+ |root|) / deg`.
///
/// Irreducibility is checked only partially: a rational root, a repeated
/// factor or a nontrivial content is rejected.
pub fn weil_height_minpoly(f: &IntPoly) -> Result<f64> {
    let deg = match f.degree() {
        None | Some(0) => {
            return Err(Error::InvalidArgument(
                "minimal polynomial must have degree >= 1".into(),
            ))
        }
        Some(d) => d,
    };
    let content = f.content();
    if content != BigInt::from(1) {
        return Err(Error::NotIrreducible(format!(
            "{f} has content {content}"
        )));
    }
    if deg > 1 {
        if let Some((r, _)) = rational_roots(f)?.into_iter().next() {
            return Err(Error::NotIrreducible(format!("{f} has the rational root {r}")));
        }
        if f.square_free_decomposition().iter().any(|(_, m)| *m > 1) {
            return Err(Error::NotIrreducible(format!("{f} has a repeated factor")));
        }
    }
    let lead = f.lead().expect("nonzero").abs();
    let mut total = ln_abs_big(&lead);
    if deg == 1 {
        let root = BigRat::new(-f.coeff(0), f.coeff(1));
        if !root.is_zero() {
            total += PlaceQ::Arch.ln_abs(&root).max(0.0);
        }
    } else {
        for (z, m) in poly_roots_complex(f, DEFAULT_ROOT_RESIDUAL)? {
            total += m as f64 * z.norm().ln().max(0.0);
        }
    }
    Ok(total / deg as f64)
}

#[cfg(test)]
mod tests {
    use super::*;
    use num_bigint::BigUint;
    use proptest::prelude::*;
    use std::f64::consts::LN_2;

    fn q(s: &str) -> ProjPointQ {
        s.parse().unwrap()
    }

    #[test]
    fn weil_height_examples() {
        assert!((weil_height(&q("3/2")) - 3f64.ln()).abs() < 1e-15);
        assert_eq!(weil_height(&q("1")), 0.0);
        assert!((weil_height(&q("1/2")) - LN_2).abs() < 1e-15);
    }

    #[test]
    fn local_height_examples() {
        let p = q("3/2");
        assert!((local_height(&p, PlaceQ::Arch).unwrap() - 1.5f64.ln()).abs() < 1e-15);
        assert!((local_height(&p, PlaceQ::Prime(2)).unwrap() - LN_2).abs() < 1e-15);
        assert_eq!(local_height(&p, PlaceQ::Prime(5)).unwrap(), 0.0);
        assert_eq!(local_height(&q("inf"), PlaceQ::Arch), Err(Error::InfinitePoint));
    }

    /// Mahler measure by averaging `ln |f(e^{it})|` over a fine grid (Jensen).
    fn jensen_oracle(c: &[f64]) -> f64 {
        let n = 200_000;
        let mut acc = 0.0;
        for k in 0..n {
            let t = std::f64::consts::TAU * (k as f64 + 0.5) / n as f64;
            let z = num_complex::Complex64::from_polar(1.0, t);
            let v = c.iter().rev().fold(num_complex::Complex64::new(0.0, 0.0), |a, &ci| a * z + ci);
            acc += v.norm().ln();
        }
        acc / n as f64
    }

    #[test]
    fn minpoly_heights() {
        let f = IntPoly::from_i64(&[-2, 0, 1]);
        let h = weil_height_minpoly(&f).unwrap();
        assert!((h - 0.5 * LN_2).abs() < 1e-14);
        assert!((h - jensen_oracle(&[-2.0, 0.0, 1.0]) / 2.0).abs() < 1e-6);
        let g = IntPoly::from_i64(&[1, -3, 0, 2]); // 2x^3 - 3x + 1 has root 1
        assert!(matches!(weil_height_minpoly(&g), Err(Error::NotIrreducible(_))));
        let f = IntPoly::from_i64(&[1, 1, 0, 3]);
        let h = weil_height_minpoly(&f).unwrap();
        assert!((h - jensen_oracle(&[1.0, 1.0, 0.0, 3.0]) / 3.0).abs() < 1e-6);
        assert!((weil_height_minpoly(&IntPoly::from_i64(&[-3, 1])).unwrap() - 3f64.ln()).abs() < 1e-15);
        assert!((weil_height_minpoly(&IntPoly::from_i64(&[-1, 2])).unwrap() - LN_2).abs() < 1e-15);
    }

    #[test]
    fn place_parsing() {
        assert_eq!("arch".parse::<PlaceQ>().unwrap(), PlaceQ::Arch);
        assert_eq!("2".parse::<PlaceQ>().unwrap(), PlaceQ::Prime(2));
        assert!("4".parse::<PlaceQ>().is_err());
    }

    proptest! {
        #[test]
        fn height_is_sum_of_local_heights(a in -100_000i64..100_000, b in 1i64..100_000) {
            let p = ProjPointQ::new(a, b).unwrap();
            let mut total = local_height(&p, PlaceQ::Arch).unwrap();
            let bb = p.b().magnitude().clone();
            if bb > BigUint::from(1u32) {
                for prime in crate::exactnum::factor_int(p.b(), 64).unwrap().keys() {
                    let pr: u64 = prime.try_into().unwrap();
                    total += local_height(&p, PlaceQ::Prime(pr)).unwrap();
                }
            }
            prop_assert!((total - weil_height(&p)).abs() <= 1e-12 * weil_height(&p).max(1.0));
        }
    }
}
