//! The acceptance battery: fourteen checks of the worked example system
//! `{z^2 (1/2), 2 z^2 (1/2)}`, shared by the integration tests and the
//! command-line `suite` command.

use std::f64::consts::{LN_2, TAU};
use std::fmt;
use std::time::Instant;

use num_bigint::BigInt;
use num_traits::{One, Zero};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::archpotential::{pullback_invariance_residual, radii, EmpiricalCDF, GreenConfig, GreenFunction, RadiiConfig};
use crate::dynsys::{exceptional_set, make_map, StochasticSystem};
use crate::error::Result;
use crate::exactnum::{rat, BigRat, CompensatedSum, ExactLog, IntPoly, LogPoint, ProjPointQ};
use crate::heights::{
    measure_height_exact, product_formula_sum, standard_energy_defect, weil_height, DiscreteMeasure, PlaceQ,
};
use crate::orbits::{backward_sample, backward_tree, tree_stoch_height, well_distributed_stat};
use crate::padicmodel::equidist_test_padic;
use crate::stochheight::{stoch_height_exact, weil_comparison_residual};

/// Number of acceptance criteria.
pub const CRITERIA: u32 = 14;

/// The example system `{z^2, 2 z^2}` with equal probabilities.
pub fn example_system() -> StochasticSystem {
    StochasticSystem::new(
        vec![
            make_map(&IntPoly::from_i64(&[0, 0, 1]), &IntPoly::from_i64(&[1])).expect("z^2"),
            make_map(&IntPoly::from_i64(&[0, 0, 2]), &IntPoly::from_i64(&[1])).expect("2z^2"),
        ],
        vec![rat(1, 2), rat(1, 2)],
    )
    .expect("valid system")
}

/// Inputs of the battery.
#[derive(Debug, Clone)]
pub struct SuiteConfig {
    pub system: StochasticSystem,
    pub seed: u64,
    /// Samples for the sampling criteria.
    pub samples: usize,
    /// Depth of the sampled backward orbits and canonical samples.
    pub depth: usize,
}

impl Default for SuiteConfig {
    fn default() -> Self {
        Self {
            system: example_system(),
            seed: 0,
            samples: 100_000,
            depth: 30,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct CriterionResult {
    pub id: u32,
    pub title: &'static str,
    pub passed: bool,
    /// The headline measured quantity.
    pub value: f64,
    /// The bound it is compared with.
    pub threshold: f64,
    pub detail: String,
    pub seconds: f64,
}

impl fmt::Display for CriterionResult {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "[{}] {:>2}. {} | value {:.6e} vs {:.6e} | {:.2}s | {}",
            if self.passed { "PASS" } else { "FAIL" },
            self.id,
            self.title,
            self.value,
            self.threshold,
            self.seconds,
            self.detail
        )
    }
}

pub fn title(id: u32) -> &'static str {
    match id {
        1 => "radial law of backward orbits",
        2 => "angular uniformity of backward orbits",
        3 => "2-adic segment law",
        4 => "exact stochastic heights at depth 12",
        5 => "geometric height decay of backward-orbit trees",
        6 => "product formula on fuzzed measure pairs",
        7 => "linearity of measure heights",
        8 => "lower bounds for standard pairings",
        9 => "exceptional sets",
        10 => "Green's function spot values",
        11 => "inner and outer radii",
        12 => "comparison with the Weil height",
        13 => "well-distributedness of the backward tree",
        14 => "pullback invariance of the canonical measure",
        _ => "unknown criterion",
    }
}

/// Runs one criterion.
pub fn run_criterion(id: u32, cfg: &SuiteConfig) -> Result<CriterionResult> {
    let start = Instant::now();
    let (passed, value, threshold, detail) = match id {
        1 => radial_law(cfg)?,
        2 => angular_law(cfg)?,
        3 => segment_law(cfg)?,
        4 => exact_heights(cfg)?,
        5 => height_decay(cfg)?,
        6 => product_formula(cfg)?,
        7 => linearity(cfg)?,
        8 => pairing_bounds(cfg)?,
        9 => exceptionality(cfg)?,
        10 => green_values(cfg)?,
        11 => radii_values(cfg)?,
        12 => weil_comparison(cfg)?,
        13 => well_distributed(cfg)?,
        14 => pullback(cfg)?,
        _ => {
            return Err(crate::Error::InvalidArgument(format!(
                "no criterion {id}"
            )))
        }
    };
    let seconds = start.elapsed().as_secs_f64();
    let (passed, detail) = match runtime_limit(id) {
        Some(limit) if seconds >= limit => (false, format!("{detail}; runtime {seconds:.1}s over {limit}s")),
        _ => (passed, detail),
    };
    Ok(CriterionResult {
        id,
        title: title(id),
        passed,
        value,
        threshold,
        detail,
        seconds,
    })
}

/// Runs every criterion in order.
pub fn run_suite(cfg: &SuiteConfig) -> Vec<Result<CriterionResult>> {
    (1..=CRITERIA).map(|id| run_criterion(id, cfg)).collect()
}

fn runtime_limit(id: u32) -> Option<f64> {
    match id {
        1 => Some(60.0),
        10 => Some(30.0),
        _ => None,
    }
}

type Outcome = (bool, f64, f64, String);

fn one() -> ProjPointQ {
    ProjPointQ::from_int(1)
}

fn radial_law(cfg: &SuiteConfig) -> Result<Outcome> {
    let b = backward_sample(&cfg.system, &one(), cfg.depth, cfg.samples, cfg.seed)?;
    let ks = EmpiricalCDF::new(b.radii()).ks_continuous(|r| (1.0 + r.log2()).clamp(0.0, 1.0));
    Ok((ks <= 0.02, ks, 0.02, format!("KS vs 1 + log2 r on [1/2, 1], n = {}, {} samples", cfg.depth, cfg.samples)))
}

fn angular_law(cfg: &SuiteConfig) -> Result<Outcome> {
    let b = backward_sample(&cfg.system, &one(), cfg.depth, cfg.samples, cfg.seed)?;
    let ks = EmpiricalCDF::new(b.angles()).ks_continuous(|t| (t / TAU).clamp(0.0, 1.0));
    Ok((ks <= 0.02, ks, 0.02, "KS vs uniform angle on [0, 2pi)".into()))
}

fn segment_law(cfg: &SuiteConfig) -> Result<Outcome> {
    let r = equidist_test_padic(&cfg.system, 2, &one(), cfg.depth, cfg.samples, cfg.seed)?;
    let ks = r.empirical.ks_continuous(|v| (v + 1.0).clamp(0.0, 1.0));
    Ok((ks <= 0.02, ks, 0.02, "KS of v_n vs uniform on [-1, 0]".into()))
}

/// `sum_gamma nu(gamma) h(gamma(alpha)) / deg gamma` by direct evaluation of
/// every word, independently of the prefix-sharing enumerator.
pub fn brute_force_height(s: &StochasticSystem, alpha: &ProjPointQ, n: usize) -> Result<f64> {
    let mut acc = CompensatedSum::new();
    for w in s.words(n, 1 << 20)? {
        let z = s.apply_word(&w.indices, alpha);
        let weight = &w.weight / BigRat::from_integer(BigInt::from(w.degree));
        acc.add(crate::exactnum::rat_to_f64(&weight) * weil_height(&z));
    }
    Ok(acc.value())
}

fn exact_heights(cfg: &SuiteConfig) -> Result<Outcome> {
    let n = 12;
    let cases = [
        (one(), (1.0 - 2f64.powi(-12)) * LN_2 / 2.0),
        (ProjPointQ::from_int(2), (1.5 - 2f64.powi(-13)) * LN_2),
    ];
    let mut worst: f64 = 0.0;
    let mut detail = Vec::new();
    for (alpha, closed) in &cases {
        let h = stoch_height_exact(&cfg.system, alpha, n)?.value;
        let brute = brute_force_height(&cfg.system, alpha, n)?;
        let rel = ((h - closed) / closed).abs().max(((brute - closed) / closed).abs());
        worst = worst.max(rel);
        detail.push(format!("alpha {alpha}: {h:.15} (words {brute:.15}, closed form {closed:.15})"));
    }
    Ok((worst <= 1e-12, worst, 1e-12, detail.join("; ")))
}

fn height_decay(cfg: &SuiteConfig) -> Result<Outcome> {
    let tree = backward_tree(&cfg.system, &one(), 6)?;
    let mut worst = f64::NEG_INFINITY;
    let mut parts = Vec::new();
    for n in 0..=6 {
        let h = tree_stoch_height(&cfg.system, &tree, n, 1e-4)?;
        let bound = LN_2 / 2.0 * 2f64.powi(-(n as i32)) + 1e-3;
        worst = worst.max(h - bound);
        parts.push(format!("n={n}: {h:.5} (bound {bound:.5})"));
    }
    Ok((worst <= 0.0, worst, 0.0, format!("max of h_S(Delta_n) - bound; {}", parts.join(", "))))
}

fn fuzz_point(rng: &mut ChaCha8Rng) -> ProjPointQ {
    let a: i64 = rng.gen_range(-50..=50);
    let b: i64 = rng.gen_range(1..=50);
    ProjPointQ::new(a, b).expect("b > 0")
}

fn fuzz_measure(rng: &mut ChaCha8Rng) -> DiscreteMeasure {
    let k = rng.gen_range(1..=4);
    let pts: Vec<ProjPointQ> = (0..k).map(|_| fuzz_point(rng)).collect();
    let raw: Vec<i64> = (0..k).map(|_| rng.gen_range(1..=9)).collect();
    let total: i64 = raw.iter().sum();
    DiscreteMeasure::new(pts.into_iter().zip(raw).map(|(p, w)| (p, rat(w, total)))).expect("weights sum to 1")
}

fn product_formula(cfg: &SuiteConfig) -> Result<Outcome> {
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed ^ 6);
    let mut failures = 0;
    for _ in 0..100 {
        let (g, d) = (fuzz_measure(&mut rng), fuzz_measure(&mut rng));
        if !product_formula_sum(&g, &d)?.is_zero() {
            failures += 1;
        }
    }
    Ok((failures == 0, failures as f64, 0.0, "nonzero exact sums out of 100 pairs".into()))
}

fn linearity(cfg: &SuiteConfig) -> Result<Outcome> {
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed ^ 7);
    let mut failures = 0;
    for _ in 0..100 {
        let k = rng.gen_range(2..=4);
        let parts: Vec<DiscreteMeasure> = (0..k).map(|_| fuzz_measure(&mut rng)).collect();
        let raw: Vec<i64> = (0..k).map(|_| rng.gen_range(1..=9)).collect();
        let total: i64 = raw.iter().sum();
        let ts: Vec<BigRat> = raw.iter().map(|w| rat(*w, total)).collect();
        let mix = DiscreteMeasure::mix(&ts.iter().cloned().zip(parts.iter()).collect::<Vec<_>>())?;
        let lhs = measure_height_exact(&mix)?;
        let mut rhs = ExactLog::new();
        for (t, m) in ts.iter().zip(&parts) {
            rhs.add_assign(&measure_height_exact(m)?.scaled(t));
        }
        if lhs != rhs {
            failures += 1;
        }
    }
    Ok((failures == 0, failures as f64, 0.0, "exact mismatches out of 100 combinations".into()))
}

fn pairing_bounds(cfg: &SuiteConfig) -> Result<Outcome> {
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed ^ 8);
    let arch_floor = -LN_2 + 1e-12;
    let mut min_arch = f64::INFINITY;
    let mut min_finite = f64::INFINITY;
    for _ in 0..1000 {
        let m = fuzz_measure(&mut rng);
        min_arch = min_arch.min(standard_energy_defect(&m, PlaceQ::Arch)?);
        for p in [2, 3, 5, 7] {
            min_finite = min_finite.min(standard_energy_defect(&m, PlaceQ::Prime(p))?);
        }
    }
    let passed = min_finite >= 0.0 && min_arch >= arch_floor;
    Ok((
        passed,
        min_arch,
        arch_floor,
        format!("min archimedean defect {min_arch:.6}; min defect at p = 2, 3, 5, 7: {min_finite:.6}"),
    ))
}

fn exceptionality(cfg: &SuiteConfig) -> Result<Outcome> {
    let e = exceptional_set(&cfg.system)?;
    let expected = vec![ProjPointQ::from_int(0), ProjPointQ::infinity()];
    let first = e.points == expected && e.unresolved.is_empty();
    let s = StochasticSystem::new(
        vec![
            make_map(&IntPoly::from_i64(&[1]), &IntPoly::from_i64(&[0, 0, 1]))?,
            make_map(&IntPoly::from_i64(&[1, 0, 1]), &IntPoly::from_i64(&[1]))?,
        ],
        vec![rat(1, 2), rat(1, 2)],
    )?;
    let inf = ProjPointQ::infinity();
    let words = s.words(2, 100)?;
    let depth_two = words
        .iter()
        .all(|w| s.word_ramification(&w.indices, &inf) == w.degree);
    let not_exceptional = !s.is_exceptional(&inf)?;
    let sigma = crate::exactnum::rat_to_f64(&s.sigma3(&inf)?);
    let passed = first && depth_two && not_exceptional;
    Ok((
        passed,
        sigma,
        1.0,
        format!(
            "E_S = {:?}; {{1/z^2, z^2+1}}: all {} depth-2 words totally ramified at inf: {depth_two}, sigma_3(inf) = {sigma}",
            e.points,
            words.len()
        ),
    ))
}

fn green_values(cfg: &SuiteConfig) -> Result<Outcome> {
    let g = GreenFunction::new(&cfg.system, GreenConfig::for_tolerance(&cfg.system, 1e-4)?)?;
    let mut worst = (g.eval(LogPoint::ZERO)?.value + LN_2 / 2.0).abs();
    for r in [1.0f64, 2.0, 10.0] {
        for k in 0..8 {
            let z = LogPoint::new(r.ln(), TAU * k as f64 / 8.0);
            worst = worst.max(g.eval(z)?.value.abs());
        }
    }
    Ok((worst <= 1e-3, worst, 1e-3, "max error at 0 and |z| in {1, 2, 10}".into()))
}

fn radii_values(cfg: &SuiteConfig) -> Result<Outcome> {
    let mut rc = RadiiConfig::for_tolerance(&cfg.system, 1e-4)?;
    rc.green.seed = cfg.seed;
    let r = radii(&cfg.system, &rc)?;
    let rel_in = (r.r_in / 2f64.powf(-1.0 / 6.0) - 1.0).abs();
    let rel_out = (r.r_out / 2f64.powf(1.0 / 3.0) - 1.0).abs();
    let sq = StochasticSystem::single(make_map(&IntPoly::from_i64(&[0, 0, 1]), &IntPoly::from_i64(&[1]))?);
    let rs = radii(&sq, &RadiiConfig::for_tolerance(&sq, 1e-4)?)?;
    let sq_err = (rs.r_in - 1.0).abs().max((rs.r_out - 1.0).abs());
    let worst = rel_in.max(rel_out);
    Ok((
        worst <= 0.01 && sq_err <= 1e-9,
        worst,
        0.01,
        format!(
            "example ({:.5}, {:.5}), (rho, rho) = {:.5}; z^2 ({}, {})",
            r.r_in, r.r_out, r.energy, rs.r_in, rs.r_out
        ),
    ))
}

fn weil_comparison(cfg: &SuiteConfig) -> Result<Outcome> {
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed ^ 12);
    let cap = 10f64.exp().floor() as i64;
    let mut worst: f64 = 0.0;
    let mut budget = 0.0;
    for _ in 0..50 {
        let alpha = loop {
            let a: i64 = rng.gen_range(-cap..=cap);
            let b: i64 = rng.gen_range(1..=cap);
            let p = ProjPointQ::new(a, b).expect("b > 0");
            if !p.a().is_zero() && weil_height(&p) <= 10.0 {
                break p;
            }
        };
        let (res, b) = weil_comparison_residual(&cfg.system, &alpha)?;
        worst = worst.max(res);
        budget = b;
    }
    Ok((worst <= budget, worst, budget, "max |h_S - h| over 50 points of height <= 10".into()))
}

fn well_distributed(cfg: &SuiteConfig) -> Result<Outcome> {
    let tree = backward_tree(&cfg.system, &one(), 6)?;
    let stats: Vec<BigRat> = (0..=6)
        .map(|k| well_distributed_stat(&tree, k))
        .collect::<Result<_>>()?;
    let monotone = stats.windows(2).all(|w| w[1] <= w[0]);
    let mut ratio: f64 = 0.0;
    let mut geometric = true;
    for k in 0..=2 {
        let bound = &stats[0] * BigRat::new(BigInt::one(), BigInt::from(4).pow(k as u32));
        geometric &= stats[3 * k] <= bound;
        ratio = ratio.max(crate::exactnum::rat_to_f64(&(&stats[3 * k] / &bound)));
    }
    Ok((
        monotone && geometric,
        ratio,
        1.0,
        format!(
            "sum of squared masses by level: {}",
            stats.iter().map(|s| s.to_string()).collect::<Vec<_>>().join(", ")
        ),
    ))
}

fn pullback(cfg: &SuiteConfig) -> Result<Outcome> {
    let r = pullback_invariance_residual(&cfg.system, cfg.depth, cfg.samples, cfg.seed)?;
    Ok((r <= 0.01, r, 0.01, "two-sample KS of radial laws at depths n and n + 1".into()))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn brute_force_agrees_with_small_cases() {
        let s = example_system();
        // depth 1: (h(1) + h(2)) / 4 = ln 2 / 4
        let h = brute_force_height(&s, &one(), 1).unwrap();
        assert!((h - LN_2 / 4.0).abs() < 1e-15);
    }

    #[test]
    fn unknown_criterion_is_an_error() {
        assert!(run_criterion(0, &SuiteConfig::default()).is_err());
        assert!(run_criterion(15, &SuiteConfig::default()).is_err());
    }

    #[test]
    fn display_marks_outcome() {
        let r = CriterionResult {
            id: 3,
            title: title(3),
            passed: true,
            value: 0.01,
            threshold: 0.02,
            detail: String::new(),
            seconds: 0.5,
        };
        assert!(r.to_string().starts_with("[PASS]  3."));
    }
}
