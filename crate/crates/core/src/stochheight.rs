//! Stochastic heights `h_S(alpha) = lim E_{S^n} h(gamma_n(alpha)) / deg gamma_n`:
//! exact enumeration over words, Monte Carlo over sampled words, automatic
//! depth selection from the geometric tail bound, and the identities the
//! height satisfies.

use std::collections::{BTreeSet, HashMap};

use num_bigint::BigUint;
use num_traits::ToPrimitive;
use rayon::prelude::*;

use crate::dynsys::{StochasticSystem, DEFAULT_WORD_CAP};
use crate::error::{Error, Result};
use crate::exactnum::{
    factor_int, ln_abs_big, rat_to_f64, valuation_int, CompensatedSum, ProjPointQ,
    DEFAULT_FACTOR_BITS,
};
use crate::heights::{l1_height_control_total, weil_height, PlaceQ};
use crate::sampling::{run_workers, RunningStats, DEFAULT_WORKERS};

/// Default bound on the bit length of forward-orbit coordinates.
pub const DEFAULT_BIT_BUDGET: u64 = 1 << 20;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum EstimateMode {
    Exact,
    MonteCarlo,
}

impl EstimateMode {
    pub fn as_str(&self) -> &'static str {
        match self {
            EstimateMode::Exact => "exact",
            EstimateMode::MonteCarlo => "monte_carlo",
        }
    }
}

/// A truncated stochastic height with separately reported truncation and
/// sampling errors.
#[derive(Debug, Clone, PartialEq)]
pub struct StochHeightEstimate {
    pub value: f64,
    pub stderr: f64,
    pub depth: usize,
    pub mode: EstimateMode,
    pub samples: u64,
    /// `(int C_S) delta_S^(1-n) / (delta_S - 1)`.
    pub tail_bound: f64,
}

/// Geometric truncation bound at depth `n` for the system.
pub fn tail_bound(s: &StochasticSystem, n: usize) -> Result<f64> {
    let l1 = l1_height_control_total(s)?.total;
    Ok(tail_from(l1, rat_to_f64(&s.stochastic_degree()), n))
}

fn tail_from(l1: f64, delta: f64, n: usize) -> f64 {
    if l1 == 0.0 {
        return 0.0;
    }
    l1 * delta.powf(1.0 - n as f64) / (delta - 1.0)
}

/// Forward orbit under `word`, within the bit budget.
fn orbit_end(
    s: &StochasticSystem,
    alpha: &ProjPointQ,
    word: &[usize],
    budget: u64,
) -> Result<ProjPointQ> {
    let mut z = alpha.clone();
    for &i in word {
        z = s.map(i).eval_checked(&z, budget)?;
    }
    Ok(z)
}

struct Enumerator<'a> {
    s: &'a StochasticSystem,
    ln_deg: Vec<f64>,
    ln_prob: Vec<f64>,
    budget: u64,
}

impl Enumerator<'_> {
    /// Adds `nu(gamma) h(gamma(z)) / deg(gamma)` over all completions of a
    /// prefix with log-weight `lw` and log-degree `ld`.
    fn walk(&self, z: &ProjPointQ, rest: usize, lw: f64, ld: f64, acc: &mut CompensatedSum) -> Result<()> {
        if rest == 0 {
            acc.add((lw - ld).exp() * weil_height(z));
            return Ok(());
        }
        for i in 0..self.s.len() {
            let w = self.s.map(i).eval_checked(z, self.budget)?;
            self.walk(&w, rest - 1, lw + self.ln_prob[i], ld + self.ln_deg[i], acc)?;
        }
        Ok(())
    }
}

/// Exact weighted sum over all `|S|^n` words, with prefix sharing.
pub fn stoch_height_exact(s: &StochasticSystem, alpha: &ProjPointQ, n: usize) -> Result<StochHeightEstimate> {
    stoch_height_exact_with(s, alpha, n, DEFAULT_WORD_CAP, DEFAULT_BIT_BUDGET)
}

pub fn stoch_height_exact_with(
    s: &StochasticSystem,
    alpha: &ProjPointQ,
    n: usize,
    cap: u128,
    budget: u64,
) -> Result<StochHeightEstimate> {
    s.check_word_count(n, cap)?;
    let e = Enumerator {
        s,
        ln_deg: s.maps().iter().map(|m| (m.degree() as f64).ln()).collect(),
        ln_prob: s.probs_f64().iter().map(|p| p.ln()).collect(),
        budget,
    };
    // split on short prefixes for parallelism; merge in prefix order
    let split = n.min(((DEFAULT_WORKERS * 4) as f64).log(s.len().max(2) as f64).ceil() as usize);
    let prefixes = s.words(split, cap)?;
    let parts: Vec<Result<f64>> = prefixes
        .par_iter()
        .map(|w| {
            let z = orbit_end(s, alpha, &w.indices, budget)?;
            let lw = w.indices.iter().map(|&i| e.ln_prob[i]).sum::<f64>();
            let ld = w.indices.iter().map(|&i| e.ln_deg[i]).sum::<f64>();
            let mut acc = CompensatedSum::new();
            e.walk(&z, n - split, lw, ld, &mut acc)?;
            Ok(acc.value())
        })
        .collect();
    let mut total = CompensatedSum::new();
    for p in parts {
        total.add(p?);
    }
    Ok(StochHeightEstimate {
        value: total.value(),
        stderr: 0.0,
        depth: n,
        mode: EstimateMode::Exact,
        samples: 0,
        tail_bound: tail_bound(s, n)?,
    })
}

/// Monte Carlo over i.i.d. words of length `n`; reproducible for a seed.
pub fn stoch_height_mc(
    s: &StochasticSystem,
    alpha: &ProjPointQ,
    n: usize,
    samples: usize,
    seed: u64,
) -> Result<StochHeightEstimate> {
    stoch_height_mc_with(s, alpha, n, samples, seed, DEFAULT_BIT_BUDGET)
}

pub fn stoch_height_mc_with(
    s: &StochasticSystem,
    alpha: &ProjPointQ,
    n: usize,
    samples: usize,
    seed: u64,
    budget: u64,
) -> Result<StochHeightEstimate> {
    if samples == 0 {
        return Err(Error::InvalidArgument("samples must be >= 1".into()));
    }
    let ln_deg: Vec<f64> = s.maps().iter().map(|m| (m.degree() as f64).ln()).collect();
    let parts = run_workers(seed, samples, DEFAULT_WORKERS, |_, rng, count| {
        let mut stats = RunningStats::default();
        let mut word = vec![0usize; n];
        for _ in 0..count {
            for slot in word.iter_mut() {
                *slot = s.sample_map(rng);
            }
            let z = orbit_end(s, alpha, &word, budget)?;
            let ld: f64 = word.iter().map(|&i| ln_deg[i]).sum();
            stats.push(weil_height(&z) / ld.exp());
        }
        Ok::<_, Error>(stats)
    });
    let mut stats = RunningStats::default();
    for p in parts {
        stats.merge(&p?);
    }
    Ok(StochHeightEstimate {
        value: stats.mean,
        stderr: stats.stderr(),
        depth: n,
        mode: EstimateMode::MonteCarlo,
        samples: samples as u64,
        tail_bound: tail_bound(s, n)?,
    })
}

/// Smallest depth `n >= 1` whose tail bound is at most `tol`.
pub fn depth_for_tolerance(s: &StochasticSystem, tol: f64) -> Result<usize> {
    if !(tol > 0.0) {
        return Err(Error::InvalidArgument("tolerance must be positive".into()));
    }
    let l1 = l1_height_control_total(s)?.total;
    let delta = rat_to_f64(&s.stochastic_degree());
    let mut n = 1;
    while tail_from(l1, delta, n) > tol {
        n += 1;
    }
    Ok(n)
}

/// Estimate within `tol`: the depth makes the tail bound at most `tol`;
/// exact enumeration is used when the words fit under the cap, otherwise
/// Monte Carlo with enough samples for a standard error at most `tol`.
pub fn stoch_height(s: &StochasticSystem, alpha: &ProjPointQ, tol: f64) -> Result<StochHeightEstimate> {
    stoch_height_seeded(s, alpha, tol, 0)
}

pub fn stoch_height_seeded(
    s: &StochasticSystem,
    alpha: &ProjPointQ,
    tol: f64,
    seed: u64,
) -> Result<StochHeightEstimate> {
    let n = depth_for_tolerance(s, tol)?;
    if s.check_word_count(n, DEFAULT_WORD_CAP).is_ok() {
        return stoch_height_exact(s, alpha, n);
    }
    let pilot = stoch_height_mc(s, alpha, n, 1000, seed)?;
    let var = pilot.stderr * pilot.stderr * 1000.0;
    let samples = ((1.2 * var / (tol * tol)).ceil() as usize).clamp(1000, 10_000_000);
    stoch_height_mc(s, alpha, n, samples, seed)
}

/// `|h_S(alpha) - sum_phi nu(phi) h_S(phi(alpha)) / deg phi|`.
pub fn scaling_residual(s: &StochasticSystem, alpha: &ProjPointQ, tol: f64) -> Result<f64> {
    let sub_tol = tol / (2.0 * s.len() as f64);
    let lhs = stoch_height(s, alpha, sub_tol)?.value;
    let mut rhs = CompensatedSum::new();
    for (i, (m, p)) in s.iter().enumerate() {
        let _ = i;
        let image = m.eval(alpha);
        rhs.add(rat_to_f64(p) * stoch_height(s, &image, sub_tol)?.value / m.degree() as f64);
    }
    Ok((lhs - rhs.value()).abs())
}

/// Tolerance of the `h_S` estimate inside [`weil_comparison_residual`]; small
/// next to any nonzero budget while keeping orbit integers moderate.
pub const WEIL_COMPARISON_TOL: f64 = 1e-3;

/// `(|h_S(alpha) - h(alpha)|, 6 int C_S)`; the first should not exceed the second.
pub fn weil_comparison_residual(s: &StochasticSystem, alpha: &ProjPointQ) -> Result<(f64, f64)> {
    let hs = stoch_height(s, alpha, WEIL_COMPARISON_TOL)?.value;
    let budget = 6.0 * l1_height_control_total(s)?.total;
    Ok(((hs - weil_height(alpha)).abs(), budget))
}

/// Action of a monomial-like system on `t = ln |z|_v` at one place:
/// `a z^d` acts by `t -> ln|a|_v + d t`, `a z^-d` by `t -> ln|a|_v - d t`.
#[derive(Debug, Clone)]
pub struct LogAffineSystem {
    shift: Vec<f64>,
    degree: Vec<f64>,
    inverted: Vec<bool>,
    probs: Vec<f64>,
}

impl LogAffineSystem {
    /// `None` unless every map is monomial-like.
    pub fn at_place(s: &StochasticSystem, v: PlaceQ) -> Option<Self> {
        let mut out = LogAffineSystem {
            shift: Vec::new(),
            degree: Vec::new(),
            inverted: Vec::new(),
            probs: s.probs_f64().to_vec(),
        };
        for m in s.maps() {
            let mono = m.monomial()?;
            out.shift.push(v.ln_abs(&mono.coeff));
            out.degree.push(mono.degree as f64);
            out.inverted.push(mono.inverted);
        }
        Some(out)
    }

    /// Backward step through map `i`: the value of `t` at any preimage.
    pub fn backward(&self, i: usize, t: f64) -> f64 {
        if self.inverted[i] {
            (self.shift[i] - t) / self.degree[i]
        } else {
            (t - self.shift[i]) / self.degree[i]
        }
    }

    fn forward(&self, i: usize, t: f64) -> f64 {
        if self.inverted[i] {
            self.shift[i] - self.degree[i] * t
        } else {
            self.shift[i] + self.degree[i] * t
        }
    }

    /// Local escape rate `lim E (1/deg gamma_n) ln+ |gamma_n(z)|_v` as a
    /// function of `t = ln|z|_v`, to absolute accuracy `tol`.
    pub fn escape(&self, t: f64, tol: f64) -> f64 {
        if t.is_infinite() {
            // 0 and infinity have height zero
            return 0.0;
        }
        let inv_delta: f64 = self.probs.iter().zip(&self.degree).map(|(p, d)| p / d).sum();
        let c_max = self
            .shift
            .iter()
            .zip(&self.degree)
            .map(|(c, d)| c.abs() / d)
            .fold(0.0, f64::max);
        // truncation error after k steps is at most c_max inv_delta^k / (1 - inv_delta)
        let mut depth = 0;
        while c_max * inv_delta.powi(depth) / (1.0 - inv_delta) > tol && depth < 200 {
            depth += 1;
        }
        let absorb = (!self.inverted.iter().any(|&x| x)).then(|| {
            let hi = self
                .shift
                .iter()
                .zip(&self.degree)
                .map(|(c, d)| -c / (d - 1.0))
                .fold(0.0, f64::max);
            let lo = self
                .shift
                .iter()
                .zip(&self.degree)
                .map(|(c, d)| -c / (d - 1.0))
                .fold(0.0, f64::min);
            let k = self
                .probs
                .iter()
                .zip(self.shift.iter().zip(&self.degree))
                .map(|(p, (c, d))| p * c / d)
                .sum::<f64>()
                / (1.0 - inv_delta);
            (lo, hi, k)
        });
        let mut memo = HashMap::new();
        self.escape_rec(t, depth as usize, absorb, &mut memo)
    }

    fn escape_rec(
        &self,
        t: f64,
        depth: usize,
        absorb: Option<(f64, f64, f64)>,
        memo: &mut HashMap<(u64, usize), f64>,
    ) -> f64 {
        if let Some((lo, hi, k)) = absorb {
            // beyond hi every orbit stays positive and grows affinely;
            // below lo every orbit stays non-positive
            if t >= hi {
                return t + k;
            }
            if t <= lo {
                return 0.0;
            }
        }
        if depth == 0 {
            return t.max(0.0);
        }
        if let Some(&v) = memo.get(&(t.to_bits(), depth)) {
            return v;
        }
        let mut acc = CompensatedSum::new();
        for i in 0..self.probs.len() {
            let next = self.forward(i, t);
            acc.add(self.probs[i] / self.degree[i] * self.escape_rec(next, depth - 1, absorb, memo));
        }
        let v = acc.value();
        memo.insert((t.to_bits(), depth), v);
        v
    }
}

/// Places that can carry height for a monomial-like system started at
/// `alpha`: the archimedean place, primes of the coefficients and primes
/// of `alpha`.
pub fn monomial_places(s: &StochasticSystem, alpha: &ProjPointQ) -> Result<Vec<PlaceQ>> {
    let mut primes: BTreeSet<BigUint> = BTreeSet::new();
    let mut add = |n: &num_bigint::BigInt| -> Result<()> {
        if n.bits() > 0 {
            primes.extend(factor_int(n, DEFAULT_FACTOR_BITS)?.into_keys());
        }
        Ok(())
    };
    for m in s.maps() {
        let mono = m.monomial().ok_or_else(|| {
            Error::UnsupportedStructure("stochastic heights of algebraic atoms need monomial-like maps".into())
        })?;
        add(mono.coeff.numer())?;
        add(mono.coeff.denom())?;
    }
    if !alpha.is_infinity() {
        add(alpha.a())?;
        add(alpha.b())?;
    }
    let mut out = vec![PlaceQ::Arch];
    for p in primes {
        let p = p
            .to_u64()
            .ok_or_else(|| Error::UnsupportedStructure(format!("prime {p} exceeds 64 bits")))?;
        out.push(PlaceQ::Prime(p));
    }
    Ok(out)
}

/// `ln |alpha|_v` for a point of P^1(Q), infinite at 0 and infinity.
pub fn ln_abs_at(alpha: &ProjPointQ, v: PlaceQ) -> f64 {
    if alpha.is_infinity() {
        return f64::INFINITY;
    }
    if alpha.a().bits() == 0 {
        return f64::NEG_INFINITY;
    }
    match v {
        PlaceQ::Arch => ln_abs_big(alpha.a()) - ln_abs_big(alpha.b()),
        PlaceQ::Prime(p) => {
            let va = valuation_int(alpha.a(), p).unwrap_or(0) as f64;
            let vb = valuation_int(alpha.b(), p).unwrap_or(0) as f64;
            -(va - vb) * (p as f64).ln()
        }
    }
}

/// Stochastic height of an algebraic point reached from `alpha` by the
/// backward steps `path` (map indices, first step first), for a
/// monomial-like system. Every conjugate of such a point has the same
/// absolute value at each place, so the height is the sum over places of
/// the local escape rates.
pub fn monomial_atom_stoch_height(
    s: &StochasticSystem,
    alpha: &ProjPointQ,
    path: &[usize],
    tol: f64,
) -> Result<f64> {
    let places = monomial_places(s, alpha)?;
    let per_place_tol = tol / places.len() as f64;
    let mut total = CompensatedSum::new();
    for v in places {
        let sys = LogAffineSystem::at_place(s, v).expect("checked monomial-like");
        let mut t = ln_abs_at(alpha, v);
        for &i in path {
            t = sys.backward(i, t);
        }
        total.add(sys.escape(t, per_place_tol));
    }
    Ok(total.value())
}
