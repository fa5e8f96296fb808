use num_bigint::BigUint;
use num_traits::{One, Signed, ToPrimitive, Zero};
use rand::distributions::{Distribution, WeightedIndex};
use rand::Rng;

use super::RationalMapQ;
use crate::error::{Error, Result};
use crate::exactnum::{rat_to_f64, BigRat, ProjPointQ};

/// Default cap on the number of words any enumeration may visit.
pub const DEFAULT_WORD_CAP: u128 = 1_000_000;

/// A finite family of maps with strictly positive rational probabilities
/// summing to exactly 1.
#[derive(Debug, Clone)]
pub struct StochasticSystem {
    maps: Vec<RationalMapQ>,
    probs: Vec<BigRat>,
    probs_f64: Vec<f64>,
    sampler: WeightedIndex<f64>,
}

impl PartialEq for StochasticSystem {
    fn eq(&self, other: &Self) -> bool {
        self.maps == other.maps && self.probs == other.probs
    }
}

/// A word `gamma_n = phi_{i_n} o ... o phi_{i_1}`, applied first index first.
#[derive(Debug, Clone, PartialEq)]
pub struct Word {
    pub indices: Vec<usize>,
    pub weight: BigRat,
    pub degree: BigUint,
}

impl StochasticSystem {
    pub fn new(maps: Vec<RationalMapQ>, probs: Vec<BigRat>) -> Result<Self> {
        if maps.is_empty() {
            return Err(Error::InvalidSystem("no maps".into()));
        }
        if maps.len() != probs.len() {
            return Err(Error::InvalidSystem(format!(
                "{} maps but {} probabilities",
                maps.len(),
                probs.len()
            )));
        }
        if let Some(p) = probs.iter().find(|p| !p.is_positive()) {
            return Err(Error::InvalidSystem(format!(
                "probability {p} is not strictly positive"
            )));
        }
        let total: BigRat = probs.iter().sum();
        if !total.is_one() {
            return Err(Error::InvalidSystem(format!(
                "probabilities sum to {total}, not 1"
            )));
        }
        let probs_f64: Vec<f64> = probs.iter().map(rat_to_f64).collect();
        let sampler = WeightedIndex::new(&probs_f64)
            .map_err(|e| Error::InvalidSystem(format!("probabilities: {e}")))?;
        Ok(Self {
            maps,
            probs,
            probs_f64,
            sampler,
        })
    }

    /// A one-map system.
    pub fn single(map: RationalMapQ) -> Self {
        Self::new(vec![map], vec![BigRat::one()]).expect("a single map with probability 1")
    }

    pub fn len(&self) -> usize {
        self.maps.len()
    }

    pub fn is_empty(&self) -> bool {
        self.maps.is_empty()
    }

    pub fn maps(&self) -> &[RationalMapQ] {
        &self.maps
    }

    pub fn map(&self, i: usize) -> &RationalMapQ {
        &self.maps[i]
    }

    pub fn probs(&self) -> &[BigRat] {
        &self.probs
    }

    pub fn probs_f64(&self) -> &[f64] {
        &self.probs_f64
    }

    pub fn iter(&self) -> impl Iterator<Item = (&RationalMapQ, &BigRat)> {
        self.maps.iter().zip(&self.probs)
    }

    /// Draws a map index according to the probabilities.
    pub fn sample_map<R: Rng + ?Sized>(&self, rng: &mut R) -> usize {
        if self.maps.len() == 1 {
            0
        } else {
            self.sampler.sample(rng)
        }
    }

    /// Weighted harmonic mean of the degrees, `(sum_phi nu(phi)/deg phi)^-1`.
    pub fn stochastic_degree(&self) -> BigRat {
        let inv: BigRat = self
            .iter()
            .map(|(m, p)| p / BigRat::from_integer(m.degree().into()))
            .sum();
        inv.recip()
    }

    /// Number of words of length `n`, or an error when it exceeds `cap`.
    pub fn check_word_count(&self, n: usize, cap: u128) -> Result<u128> {
        let needed = (self.maps.len() as u128)
            .checked_pow(n.try_into().unwrap_or(u32::MAX))
            .unwrap_or(u128::MAX);
        if needed > cap {
            return Err(Error::WordCapExceeded { needed, cap });
        }
        Ok(needed)
    }

    /// All words of length `n` in lexicographic order of indices.
    pub fn words(&self, n: usize, cap: u128) -> Result<Vec<Word>> {
        self.check_word_count(n, cap)?;
        let mut out = vec![Word {
            indices: Vec::new(),
            weight: BigRat::one(),
            degree: BigUint::one(),
        }];
        for _ in 0..n {
            let mut next = Vec::with_capacity(out.len() * self.len());
            for w in &out {
                for (i, (m, p)) in self.iter().enumerate() {
                    let mut indices = w.indices.clone();
                    indices.push(i);
                    next.push(Word {
                        indices,
                        weight: &w.weight * p,
                        degree: &w.degree * BigUint::from(m.degree()),
                    });
                }
            }
            out = next;
        }
        Ok(out)
    }

    pub fn apply_word(&self, word: &[usize], p: &ProjPointQ) -> ProjPointQ {
        word.iter().fold(p.clone(), |z, &i| self.maps[i].eval(&z))
    }

    /// Ramification index of the composite word at `p`: the product of the
    /// indices along the forward orbit.
    pub fn word_ramification(&self, word: &[usize], p: &ProjPointQ) -> BigUint {
        let mut z = p.clone();
        let mut e = BigUint::one();
        for &i in word {
            e *= BigUint::from(self.maps[i].ramification_index(&z));
            z = self.maps[i].eval(&z);
        }
        e
    }

    /// `sigma_n(P) = sum_gamma nu(gamma) e_P(gamma) / deg(gamma)` over words
    /// of length `n`, computed exactly.
    pub fn sigma(&self, p: &ProjPointQ, n: usize, cap: u128) -> Result<BigRat> {
        self.check_word_count(n, cap)?;
        Ok(self.sigma_rec(p, n))
    }

    fn sigma_rec(&self, p: &ProjPointQ, n: usize) -> BigRat {
        if n == 0 {
            return BigRat::one();
        }
        // the sum factors along the first step of the word
        let mut acc = BigRat::zero();
        for (m, prob) in self.iter() {
            let ratio = BigRat::new(m.ramification_index(p).into(), m.degree().into());
            acc += prob * ratio * self.sigma_rec(&m.eval(p), n - 1);
        }
        acc
    }

    pub fn sigma3(&self, p: &ProjPointQ) -> Result<BigRat> {
        self.sigma(p, 3, DEFAULT_WORD_CAP)
    }

    pub fn sigma3_with_cap(&self, p: &ProjPointQ, cap: u128) -> Result<BigRat> {
        self.sigma(p, 3, cap)
    }

    /// True iff every word of length 3 is totally ramified at `p`, which
    /// characterizes the points with finite grand orbit.
    pub fn is_exceptional(&self, p: &ProjPointQ) -> Result<bool> {
        Ok(self.sigma3(p)?.is_one())
    }

    /// Largest probability as a double (used in mass-decay bounds).
    pub fn max_prob(&self) -> f64 {
        self.probs_f64.iter().cloned().fold(0.0, f64::max)
    }

    /// `ln` of the stochastic degree.
    pub fn ln_stochastic_degree(&self) -> f64 {
        rat_to_f64(&self.stochastic_degree()).ln()
    }

    /// Expected `1/deg` of a single step, `1/delta_S`, as a double.
    pub fn inv_stochastic_degree(&self) -> f64 {
        self.stochastic_degree().recip().to_f64().unwrap_or(0.0)
    }
}
