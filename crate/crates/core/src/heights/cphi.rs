use std::collections::BTreeMap;

use num_bigint::BigInt;
use num_traits::{Signed, ToPrimitive, Zero};

use super::PlaceQ;
use crate::dynsys::{RationalMapQ, StochasticSystem};
use crate::error::{Error, Result};
use crate::exactnum::{ln_abs_big, rat_to_f64, valuation_int, CompensatedSum, LogPoint};

/// Bounds on `C_phi(v) = sup_z |g_{phi,v}(z)|` for the local potential
/// `g_{phi,v}(z) = (1/d) ln max(|F(z,1)|_v, |G(z,1)|_v) - ln+ |z|_v`.
#[derive(Debug, Clone, PartialEq)]
pub struct CphiBound {
    pub map_index: usize,
    pub place: PlaceQ,
    /// Largest `|g|` found on probe points (a lower estimate of the sup).
    pub numeric_estimate: f64,
    /// Proven upper bound on the sup.
    pub certified_upper: f64,
    /// True when `certified_upper` is the exact supremum.
    pub exact: bool,
}

/// `sum_phi nu(phi) sum_v C_phi(v)` with its breakdown by place and map.
#[derive(Debug, Clone, PartialEq)]
pub struct L1Control {
    pub total: f64,
    pub per_place: BTreeMap<PlaceQ, f64>,
    pub per_map: Vec<CphiBound>,
}

impl L1Control {
    pub fn at(&self, v: PlaceQ) -> f64 {
        self.per_place.get(&v).copied().unwrap_or(0.0)
    }
}

/// `ln |n|_v` for a nonzero integer, `-inf` for zero.
fn ln_abs_int(n: &BigInt, v: PlaceQ) -> f64 {
    match v {
        PlaceQ::Arch => ln_abs_big(n),
        PlaceQ::Prime(p) => match valuation_int(n, p) {
            None => f64::NEG_INFINITY,
            Some(k) => -(k as f64) * (p as f64).ln(),
        },
    }
}

/// `ln ||coeffs||_2`.
fn ln_l2(coeffs: &[BigInt]) -> f64 {
    let sq: BigInt = coeffs.iter().map(|c| c * c).sum();
    0.5 * ln_abs_big(&sq)
}

/// `ln sum |c_i|`.
fn ln_l1(coeffs: &[BigInt]) -> f64 {
    let s: BigInt = coeffs.iter().map(|c| c.abs()).sum();
    ln_abs_big(&s)
}

/// Archimedean certified bound.
///
/// Upper side: with `max(|x|,|y|) = 1`, `|F(x,y)| <= sum |f_i|`.
/// Lower side: `Res * x^(2d-1)` and `Res * y^(2d-1)` are combinations
/// `A F + B G` whose coefficients are Sylvester cofactors, bounded by
/// Hadamard's inequality by `||f||_2^d ||g||_2^d`; summing the `d`
/// coefficients of `A` and `B` gives
/// `|Res| <= 2 d ||f||^d ||g||^d max(|F|, |G|)`.
fn arch_certified(map: &RationalMapQ) -> f64 {
    let d = map.degree() as f64;
    let f = map.f_coeffs();
    let g = map.g_coeffs();
    let upper = ln_l1(&f).max(ln_l1(&g)) / d;
    let hadamard = d * (ln_l2(&f) + ln_l2(&g));
    let lower = (ln_abs_big(map.resultant()) - (2.0 * d).ln() - hadamard) / d;
    upper.max(-lower).max(0.0)
}

/// Exact sup for `c X^d / e Y^d` and `c Y^d / e X^d`: `|g|` is piecewise
/// linear in `ln|z|` with extreme values `ln|e|/d` at 0, `ln|c|/d` at
/// infinity and `max(ln|c|, ln|e|)/d` on the unit circle.
fn monomial_sup(map: &RationalMapQ, v: PlaceQ) -> f64 {
    let d = map.degree();
    let (c, e) = if map.f_poly().coeff(d).is_zero() {
        (map.f_poly().coeff(0), map.g_poly().coeff(d))
    } else {
        (map.f_poly().coeff(d), map.g_poly().coeff(0))
    };
    let (lc, le) = (ln_abs_int(&c, v), ln_abs_int(&e, v));
    lc.abs().max(le.abs()).max(lc.max(le).abs()) / d as f64
}

/// Probe sup of `|g|` at the archimedean place over 97 radii x 64 angles.
fn arch_probe(map: &RationalMapQ) -> f64 {
    let mut best: f64 = 0.0;
    let mut probe = |z: LogPoint| best = best.max(map.local_green(z).abs());
    probe(LogPoint::ZERO);
    probe(LogPoint::INFINITY);
    for i in 0..97 {
        let t = -6.0 + 12.0 * i as f64 / 96.0;
        for k in 0..64 {
            probe(LogPoint::new(t, std::f64::consts::TAU * k as f64 / 64.0));
        }
    }
    best
}

/// Exact `|g|` at rational probes `u p^k` and `0`, `infinity` at a finite place.
fn padic_probe(map: &RationalMapQ, p: u64) -> f64 {
    let d = map.degree();
    let v = PlaceQ::Prime(p);
    let g_at = |a: &BigInt, b: &BigInt| -> f64 {
        let pt = crate::exactnum::normalize_point(a.clone(), b.clone()).expect("nonzero");
        let img_f = eval_form(&map.f_coeffs(), pt.a(), pt.b());
        let img_g = eval_form(&map.g_coeffs(), pt.a(), pt.b());
        let lm = ln_abs_int(&img_f, v).max(ln_abs_int(&img_g, v));
        // homogeneous coordinates of norm 1 at v: divide by max(|a|_v, |b|_v)
        let ln_norm = ln_abs_int(pt.a(), v).max(ln_abs_int(pt.b(), v));
        (lm - d as f64 * ln_norm) / d as f64
    };
    let mut best: f64 = 0.0;
    best = best.max(g_at(&BigInt::zero(), &BigInt::from(1)).abs());
    best = best.max(g_at(&BigInt::from(1), &BigInt::zero()).abs());
    let pb = BigInt::from(p);
    for k in 0..=4u32 {
        let pk = pb.pow(k);
        for u in 1..=p.min(6) {
            let u = BigInt::from(u);
            best = best.max(g_at(&(&u * &pk), &BigInt::from(1)).abs());
            best = best.max(g_at(&u, &pk).abs());
        }
    }
    best
}

fn eval_form(c: &[BigInt], a: &BigInt, b: &BigInt) -> BigInt {
    let mut acc = BigInt::zero();
    let mut bpow = BigInt::from(1);
    for ci in c.iter().rev() {
        acc = acc * a + ci * &bpow;
        bpow *= b;
    }
    acc
}

/// Numeric and certified bounds on `C_phi(v)`.
pub fn cphi_bound(map: &RationalMapQ, v: PlaceQ) -> CphiBound {
    let d = map.degree() as f64;
    if map.monomial().is_some() {
        let exact = monomial_sup(map, v);
        return CphiBound {
            map_index: 0,
            place: v,
            numeric_estimate: exact,
            certified_upper: exact,
            exact: true,
        };
    }
    let (numeric, certified) = match v {
        PlaceQ::Arch => (arch_probe(map), arch_certified(map)),
        PlaceQ::Prime(p) => {
            // integral forms give g <= 0, and the resultant bounds it below
            let vr = valuation_int(map.resultant(), p).expect("nonzero resultant");
            (padic_probe(map, p), vr as f64 * (p as f64).ln() / d)
        }
    };
    CphiBound {
        map_index: 0,
        place: v,
        numeric_estimate: numeric.min(certified),
        certified_upper: certified,
        exact: false,
    }
}

/// The L^1 height-control integral `sum_phi nu(phi) sum_v C_phi(v)`, using
/// certified upper bounds; only the archimedean place and primes of bad
/// reduction contribute.
pub fn l1_height_control_total(s: &StochasticSystem) -> Result<L1Control> {
    let mut per_place: BTreeMap<PlaceQ, CompensatedSum> = BTreeMap::new();
    let mut per_map = Vec::new();
    for (i, (map, prob)) in s.iter().enumerate() {
        let mut places = vec![PlaceQ::Arch];
        for p in map.bad_primes()? {
            let p = p.to_u64().ok_or_else(|| {
                Error::UnsupportedStructure(format!("bad prime {p} exceeds 64 bits"))
            })?;
            places.push(PlaceQ::Prime(p));
        }
        for v in places {
            let mut b = cphi_bound(map, v);
            b.map_index = i;
            per_place
                .entry(v)
                .or_default()
                .add(rat_to_f64(prob) * b.certified_upper);
            per_map.push(b);
        }
    }
    let per_place: BTreeMap<PlaceQ, f64> =
        per_place.into_iter().map(|(k, v)| (k, v.value())).collect();
    let total = per_place.values().copied().collect::<CompensatedSum>().value();
    Ok(L1Control {
        total,
        per_place,
        per_map,
    })
}

/// Weighted `sum_phi nu(phi) C_phi(v)` at one place, certified.
pub fn system_cphi_at(s: &StochasticSystem, v: PlaceQ) -> f64 {
    s.iter()
        .map(|(m, p)| rat_to_f64(p) * cphi_bound(m, v).certified_upper)
        .collect::<CompensatedSum>()
        .value()
}
