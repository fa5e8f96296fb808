//! Non-archimedean side: reduction type of a system at a prime, the affine
//! action of monomial-like maps on p-adic valuations, the stationary law on
//! the segment of Berkovich points `zeta_{0, p^-v}`, and p-adic
//! equidistribution tests.
//!
//! Points of the segment are parametrized by `v`, the valuation of the
//! points retracting onto them: `zeta_{0,r}` has `v = -log_p r`. A map
//! `a z^d` sends valuation `v` to `d v + v_p(a)` and `a z^-d` sends it to
//! `v_p(a) - d v`; every preimage of a point has the same valuation.

use std::fmt;
use std::io::Write;

use num_bigint::BigInt;

use crate::archpotential::EmpiricalCDF;
use crate::dynsys::StochasticSystem;
use crate::error::{Error, Result};
use crate::exactnum::{padic_valuation, rat_to_f64, valuation_int, BigRat, ProjPointQ};
use crate::heights::PlaceQ;
use crate::sampling::{run_workers, DEFAULT_WORKERS};

/// Affine action of `a z^(+-d)` on valuations.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct ValAffine {
    pub d: usize,
    /// `v_p(a)`.
    pub shift: i64,
    /// True for `a z^-d`.
    pub inverted: bool,
}

impl ValAffine {
    pub fn forward(&self, v: &BigRat) -> BigRat {
        let d = BigRat::from_integer(BigInt::from(self.d));
        let s = BigRat::from_integer(BigInt::from(self.shift));
        if self.inverted {
            s - d * v
        } else {
            d * v + s
        }
    }
}

impl fmt::Display for ValAffine {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let sign = if self.inverted { "-" } else { "" };
        write!(f, "(degree {sign}{}, shift {})", self.d, self.shift)
    }
}

/// Reduction type of a system at a prime.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum PlaceClass {
    /// `p` divides no resultant: the canonical measure is the Gauss point.
    GoodReduction,
    /// Some map has bad reduction, and every map is `a z^(+-d)`.
    MonomialLike(Vec<ValAffine>),
    /// Bad reduction for a map outside the monomial-like class.
    Unsupported,
}

fn affine_maps(s: &StochasticSystem, p: u64) -> Option<Vec<ValAffine>> {
    s.maps()
        .iter()
        .map(|m| {
            let mono = m.monomial()?;
            Some(ValAffine {
                d: mono.degree,
                shift: padic_valuation(&mono.coeff, p).expect("nonzero coefficient"),
                inverted: mono.inverted,
            })
        })
        .collect()
}

pub fn classify_place(s: &StochasticSystem, p: u64) -> Result<PlaceClass> {
    PlaceQ::prime(p)?;
    let good = s
        .maps()
        .iter()
        .all(|m| valuation_int(m.resultant(), p) == Some(0));
    if good {
        return Ok(PlaceClass::GoodReduction);
    }
    Ok(match affine_maps(s, p) {
        Some(v) => PlaceClass::MonomialLike(v),
        None => PlaceClass::Unsupported,
    })
}

/// Valuation of every preimage of a point of valuation `v`; the branch of
/// the root does not matter.
pub fn val_backward_step(m: &ValAffine, v: &BigRat) -> BigRat {
    let d = BigRat::from_integer(BigInt::from(m.d));
    let s = BigRat::from_integer(BigInt::from(m.shift));
    if m.inverted {
        (s - v) / d
    } else {
        (v - s) / d
    }
}

/// Probability law on the segment `v_lo <= v <= v_hi`, with a piecewise
/// constant density on equal bins, or a point mass when `v_lo == v_hi`.
#[derive(Debug, Clone, PartialEq)]
pub struct SegmentMeasure {
    pub v_lo: f64,
    pub v_hi: f64,
    /// Density on `density.len()` equal bins of `[v_lo, v_hi]`.
    pub density: Vec<f64>,
}

impl SegmentMeasure {
    pub fn point_mass(v: f64) -> Self {
        Self {
            v_lo: v,
            v_hi: v,
            density: Vec::new(),
        }
    }

    pub fn is_point_mass(&self) -> bool {
        self.density.is_empty()
    }

    pub fn total_mass(&self) -> f64 {
        if self.is_point_mass() {
            return 1.0;
        }
        let h = (self.v_hi - self.v_lo) / self.density.len() as f64;
        self.density.iter().sum::<f64>() * h
    }

    /// Distribution function, piecewise linear between bin edges.
    pub fn cdf(&self, v: f64) -> f64 {
        if v < self.v_lo {
            return 0.0;
        }
        if v >= self.v_hi {
            return 1.0;
        }
        let h = (self.v_hi - self.v_lo) / self.density.len() as f64;
        let x = (v - self.v_lo) / h;
        let k = (x.floor() as usize).min(self.density.len() - 1);
        let below: f64 = self.density[..k].iter().sum::<f64>() * h;
        (below + self.density[k] * (x - k as f64) * h).min(1.0)
    }
}

/// Grid points used for the distribution function iteration.
pub const SEGMENT_GRID: usize = 4096;

/// Stationary law of the valuation IFS `v -> backward step of map i` with
/// probability `nu_i`, for monomial-like systems whose maps share degree
/// and orientation. The distribution function is the fixed point of
/// `F(v) = sum_i nu_i P(f_i(V) <= v)`, iterated on a grid from the uniform
/// law on the attractor's hull.
pub fn stationary_segment(s: &StochasticSystem, p: u64) -> Result<SegmentMeasure> {
    PlaceQ::prime(p)?;
    let maps = affine_maps(s, p).ok_or_else(|| {
        Error::UnsupportedStructure(format!("the system is not monomial-like at p = {p}"))
    })?;
    let d = maps[0].d;
    let inverted = maps[0].inverted;
    if maps.iter().any(|m| m.d != d || m.inverted != inverted) {
        return Err(Error::UnsupportedStructure(
            "maps with different degrees or orientations".into(),
        ));
    }
    let df = d as f64;
    let shifts: Vec<f64> = maps.iter().map(|m| m.shift as f64).collect();
    let smin = shifts.iter().cloned().fold(f64::INFINITY, f64::min);
    let smax = shifts.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    // smallest interval mapped into itself by every backward step
    let (a, b) = if inverted {
        (
            (df * smin - smax) / (df * df - 1.0),
            (df * smax - smin) / (df * df - 1.0),
        )
    } else {
        (-smax / (df - 1.0), -smin / (df - 1.0))
    };
    if a == b {
        return Ok(SegmentMeasure::point_mass(a));
    }
    let probs = s.probs_f64();
    let n = SEGMENT_GRID;
    let h = (b - a) / n as f64;
    let grid: Vec<f64> = (0..=n).map(|j| a + j as f64 * h).collect();
    let mut f: Vec<f64> = (0..=n).map(|j| j as f64 / n as f64).collect();
    let interp = |f: &[f64], v: f64| -> f64 {
        if v <= a {
            return 0.0;
        }
        if v >= b {
            return 1.0;
        }
        let x = (v - a) / h;
        let k = (x.floor() as usize).min(n - 1);
        f[k] + (f[k + 1] - f[k]) * (x - k as f64)
    };
    for _ in 0..10_000 {
        let next: Vec<f64> = grid
            .iter()
            .map(|&v| {
                shifts
                    .iter()
                    .zip(probs)
                    .map(|(&sh, &nu)| {
                        if inverted {
                            nu * (1.0 - interp(&f, sh - df * v))
                        } else {
                            nu * interp(&f, df * v + sh)
                        }
                    })
                    .sum::<f64>()
            })
            .collect();
        let change = next
            .iter()
            .zip(&f)
            .map(|(x, y)| (x - y).abs())
            .fold(0.0, f64::max);
        f = next;
        if change < 1e-13 {
            break;
        }
    }
    f[0] = 0.0;
    f[n] = 1.0;
    let density = f.windows(2).map(|w| (w[1] - w[0]).max(0.0) / h).collect();
    Ok(SegmentMeasure {
        v_lo: a,
        v_hi: b,
        density,
    })
}

/// Outcome of a p-adic equidistribution test.
#[derive(Debug, Clone, PartialEq)]
pub struct PadicEquidist {
    pub ks: f64,
    pub class: PlaceClass,
    pub reference: SegmentMeasure,
    /// Sampled valuations `v_n`, exact.
    pub valuations: Vec<BigRat>,
    pub empirical: EmpiricalCDF,
    pub depth: usize,
}

/// Samples backward valuation paths from `v_p(alpha)` and measures their
/// distance to the stationary law. Against a point mass at `v*` the
/// statistic is the fraction of samples with `|v_n - v*| > 1/n`.
pub fn equidist_test_padic(
    s: &StochasticSystem,
    p: u64,
    alpha: &ProjPointQ,
    n: usize,
    samples: usize,
    seed: u64,
) -> Result<PadicEquidist> {
    let class = classify_place(s, p)?;
    if s.is_exceptional(alpha)? {
        return Err(Error::ExceptionalStart);
    }
    let v0 = alpha
        .to_rat()
        .and_then(|q| padic_valuation(&q, p))
        .ok_or_else(|| Error::InvalidArgument("the starting point has infinite valuation".into()))?;
    let maps = match &class {
        PlaceClass::Unsupported => {
            return Err(Error::UnsupportedStructure(format!(
                "bad reduction at p = {p} outside the monomial-like class"
            )))
        }
        _ => affine_maps(s, p).ok_or_else(|| {
            Error::UnsupportedStructure(
                "valuation dynamics are only tracked for monomial-like maps".into(),
            )
        })?,
    };
    if samples == 0 {
        return Err(Error::InvalidArgument("at least one sample is required".into()));
    }
    let reference = match &class {
        PlaceClass::GoodReduction => SegmentMeasure::point_mass(0.0),
        _ => stationary_segment(s, p)?,
    };
    let start = BigRat::from_integer(BigInt::from(v0));
    let chunks = run_workers(seed, samples, DEFAULT_WORKERS, |_, rng, count| {
        (0..count)
            .map(|_| {
                let mut v = start.clone();
                for _ in 0..n {
                    v = val_backward_step(&maps[s.sample_map(rng)], &v);
                }
                v
            })
            .collect::<Vec<_>>()
    });
    let valuations: Vec<BigRat> = chunks.into_iter().flatten().collect();
    let empirical = EmpiricalCDF::new(valuations.iter().map(rat_to_f64).collect());
    let ks = if reference.is_point_mass() {
        let window = if n == 0 { 0.0 } else { 1.0 / n as f64 };
        let target = reference.v_lo;
        let far = empirical
            .values()
            .iter()
            .filter(|&&v| (v - target).abs() > window)
            .count();
        far as f64 / samples as f64
    } else {
        empirical.ks_continuous(|v| reference.cdf(v))
    };
    Ok(PadicEquidist {
        ks,
        class,
        reference,
        valuations,
        empirical,
        depth: n,
    })
}

/// CSV with columns `v,empirical_cdf,reference_cdf` at `points` values
/// spanning the samples and the reference support.
pub fn write_segment_csv<W: Write>(res: &PadicEquidist, points: usize, mut out: W) -> std::io::Result<()> {
    writeln!(out, "v,empirical_cdf,reference_cdf")?;
    let vals = res.empirical.values();
    let lo = vals.first().copied().unwrap_or(0.0).min(res.reference.v_lo);
    let hi = vals.last().copied().unwrap_or(0.0).max(res.reference.v_hi);
    let points = points.max(2);
    for k in 0..points {
        let v = lo + (hi - lo) * k as f64 / (points - 1) as f64;
        writeln!(out, "{v:e},{:e},{:e}", res.empirical.eval(v), res.reference.cdf(v))?;
    }
    Ok(())
}
