use std::collections::BTreeMap;

use num_bigint::BigInt;
use num_traits::{One, Signed, Zero};

use super::{local_height, weil_height, PlaceQ};
use crate::error::{Error, Result};
use crate::exactnum::{
    factor_int, padic_valuation, rat_to_f64, BigRat, CompensatedSum, ExactLog, ProjPointQ,
    DEFAULT_FACTOR_BITS,
};

/// A probability measure with finite support in P^1(Q) and exact weights.
#[derive(Debug, Clone, PartialEq)]
pub struct DiscreteMeasure {
    atoms: Vec<(ProjPointQ, BigRat)>,
}

impl DiscreteMeasure {
    /// Coincident points are merged; weights must be positive and sum to 1.
    pub fn new(atoms: impl IntoIterator<Item = (ProjPointQ, BigRat)>) -> Result<Self> {
        let mut merged: BTreeMap<ProjPointQ, BigRat> = BTreeMap::new();
        for (p, w) in atoms {
            if !w.is_positive() {
                return Err(Error::InvalidArgument(format!("weight {w} is not positive")));
            }
            *merged.entry(p).or_insert_with(BigRat::zero) += w;
        }
        let total: BigRat = merged.values().sum();
        if !total.is_one() {
            return Err(Error::InvalidArgument(format!(
                "weights sum to {total}, not 1"
            )));
        }
        Ok(Self {
            atoms: merged.into_iter().collect(),
        })
    }

    pub fn dirac(p: ProjPointQ) -> Self {
        Self {
            atoms: vec![(p, BigRat::one())],
        }
    }

    /// Uniform measure on the given distinct points.
    pub fn uniform(points: Vec<ProjPointQ>) -> Result<Self> {
        let w = BigRat::new(BigInt::one(), BigInt::from(points.len()));
        Self::new(points.into_iter().map(|p| (p, w.clone())))
    }

    /// Convex combination `sum t_k Delta_k`.
    pub fn mix(parts: &[(BigRat, &DiscreteMeasure)]) -> Result<Self> {
        Self::new(
            parts
                .iter()
                .flat_map(|(t, m)| m.atoms.iter().map(move |(p, w)| (p.clone(), t * w))),
        )
    }

    pub fn atoms(&self) -> &[(ProjPointQ, BigRat)] {
        &self.atoms
    }

    pub fn len(&self) -> usize {
        self.atoms.len()
    }

    pub fn is_empty(&self) -> bool {
        self.atoms.is_empty()
    }

    fn reject_infinity(&self) -> Result<()> {
        if self.atoms.iter().any(|(p, _)| p.is_infinity()) {
            Err(Error::InfinitePoint)
        } else {
            Ok(())
        }
    }
}

/// `sum t_i h(alpha_i)`.
pub fn measure_height(m: &DiscreteMeasure) -> f64 {
    m.atoms
        .iter()
        .map(|(p, w)| rat_to_f64(w) * weil_height(p))
        .collect::<CompensatedSum>()
        .value()
}

/// `sum t_i h(alpha_i)` as an exact combination of logarithms of primes.
pub fn measure_height_exact(m: &DiscreteMeasure) -> Result<ExactLog> {
    let mut out = ExactLog::new();
    for (p, w) in &m.atoms {
        let big = if p.a().abs() >= p.b().abs() { p.a() } else { p.b() };
        out.add_log_int(big, w)?;
    }
    Ok(out)
}

fn difference(z: &ProjPointQ, w: &ProjPointQ) -> BigRat {
    z.to_rat().expect("finite") - w.to_rat().expect("finite")
}

/// Local energy pairing `-sum_{z != w} s t ln |z - w|_v`.
pub fn energy_pairing_discrete(
    gamma: &DiscreteMeasure,
    delta: &DiscreteMeasure,
    v: PlaceQ,
) -> Result<f64> {
    gamma.reject_infinity()?;
    delta.reject_infinity()?;
    let mut acc = CompensatedSum::new();
    for (z, s) in &gamma.atoms {
        for (w, t) in &delta.atoms {
            if z != w {
                acc.add(-rat_to_f64(&(s * t)) * v.ln_abs(&difference(z, w)));
            }
        }
    }
    Ok(acc.value())
}

/// Sum over all places of the local pairings, computed exactly.
///
/// The archimedean term of each pair is expanded over the primes of the
/// numerator and denominator of `z - w`; the p-adic terms come from
/// valuations at exactly those primes. The result is the exact global sum.
pub fn product_formula_sum(gamma: &DiscreteMeasure, delta: &DiscreteMeasure) -> Result<ExactLog> {
    gamma.reject_infinity()?;
    delta.reject_infinity()?;
    let mut total = ExactLog::new();
    for (z, s) in &gamma.atoms {
        for (w, t) in &delta.atoms {
            if z == w {
                continue;
            }
            let x = difference(z, w);
            let st = s * t;
            // archimedean: -st ln|x|
            total.add_log_rat(&x, &-&st)?;
            // finite places: -st ln|x|_p = st v_p(x) ln p
            let mut primes: Vec<_> = factor_int(x.numer(), DEFAULT_FACTOR_BITS)?
                .into_keys()
                .collect();
            primes.extend(factor_int(x.denom(), DEFAULT_FACTOR_BITS)?.into_keys());
            for p in primes {
                let pu: u64 = (&p).try_into().map_err(|_| {
                    Error::UnsupportedStructure(format!("prime {p} exceeds 64 bits"))
                })?;
                let vp = padic_valuation(&x, pu).expect("nonzero difference");
                total.add_prime(p, &(&st * BigRat::from_integer(vp.into())));
            }
        }
    }
    Ok(total)
}

/// `2 sum t_i ln+ |alpha_i|_v - sum_{i != j} t_i t_j ln |alpha_i - alpha_j|_v`.
pub fn standard_energy_defect(m: &DiscreteMeasure, v: PlaceQ) -> Result<f64> {
    m.reject_infinity()?;
    let mut acc = CompensatedSum::new();
    for (p, t) in &m.atoms {
        acc.add(2.0 * rat_to_f64(t) * local_height(p, v)?);
    }
    acc.add(energy_pairing_discrete(m, m, v)?);
    Ok(acc.value())
}
