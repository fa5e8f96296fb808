//! Archimedean potential theory of a stochastic system: the Green's
//! function `g_S`, the potential `p_rho = g_S + ln+|z|`, sampling of the
//! canonical measure by expected pullback of the unit circle,
//! epsilon-regularized energies, inner/outer radii and equidistribution
//! tests.
//!
//! `g_S` is evaluated by the renormalized homogeneous escape sum: along a
//! word, the coordinates are rescaled to max-norm 1 after each map, and the
//! logarithms `ln m_k` of the scale factors are accumulated with weight
//! `1 / deg gamma_k`. The expected sum is `g_S` up to the additive constant
//! fixed by `g_S(inf) = 0`.

use std::f64::consts::{PI, TAU};
use std::io::Write;

use num_complex::Complex64;
use rand::Rng;
use rayon::prelude::*;

use crate::dynsys::StochasticSystem;
use crate::error::{Error, Result};
use crate::exactnum::{rat_to_f64, CompensatedSum, LogPoint, ProjPointQ};
use crate::heights::{system_cphi_at, PlaceQ};
use crate::orbits::{backward_sample, sample_paths, OrbitSampleBatch};
use crate::sampling::{run_workers, RunningStats, DEFAULT_WORKERS};
use crate::stochheight::LogAffineSystem;

/// Largest number of words enumerated exactly in one Green's evaluation;
/// deeper truncations are estimated by sampling words.
pub const GREEN_WORD_CAP: u128 = 1 << 16;

/// Bits of a double's significand, the working precision.
pub const F64_PRECISION_BITS: u32 = 53;

/// Truncation and sampling parameters for Green's function evaluation.
#[derive(Debug, Clone, PartialEq)]
pub struct GreenConfig {
    /// Word length at which the escape sum is truncated.
    pub depth: usize,
    /// Sampled words per evaluation when exact enumeration is too large.
    pub samples: usize,
    pub tol: f64,
    /// Requested working precision in bits; values above 53 are capped.
    pub precision: u32,
    pub seed: u64,
}

impl GreenConfig {
    /// The smallest depth whose truncation error is within `tol` for both
    /// the evaluation and the normalizing value at infinity.
    pub fn for_tolerance(s: &StochasticSystem, tol: f64) -> Result<Self> {
        if !(tol > 0.0) {
            return Err(Error::InvalidArgument("tolerance must be positive".into()));
        }
        let mut depth = 1;
        while arch_tail_bound(s, depth) > tol / 2.0 {
            depth += 1;
        }
        Ok(Self {
            depth,
            samples: 20_000,
            tol,
            precision: F64_PRECISION_BITS,
            seed: 0,
        })
    }

    /// Checks that the truncation error at the chosen depth is within `tol`.
    pub fn validate(&self, s: &StochasticSystem) -> Result<()> {
        if !(self.tol > 0.0) || self.samples == 0 {
            return Err(Error::InvalidArgument(
                "tolerance and sample count must be positive".into(),
            ));
        }
        let tail = arch_tail_bound(s, self.depth);
        if tail > self.tol {
            return Err(Error::InvalidArgument(format!(
                "depth {} leaves a truncation error up to {tail:e} above tolerance {:e}",
                self.depth, self.tol
            )));
        }
        Ok(())
    }

    /// Precision actually used, in bits.
    pub fn effective_precision(&self) -> u32 {
        self.precision.min(F64_PRECISION_BITS)
    }
}

/// `C_S(arch) delta^(1-n) / (delta - 1)`: bound on the terms of the escape
/// sum beyond depth `n`.
pub fn arch_tail_bound(s: &StochasticSystem, n: usize) -> f64 {
    let c = system_cphi_at(s, PlaceQ::Arch);
    if c == 0.0 {
        return 0.0;
    }
    let delta = rat_to_f64(&s.stochastic_degree());
    c * delta.powf(1.0 - n as f64) / (delta - 1.0)
}

/// `g_{1}(z) = sum_phi nu(phi) g_phi(z)` with the local potentials
/// `g_phi(z) = (1/d) ln max(|F(z,1)|, |G(z,1)|) - ln+|z|`.
pub fn g1_eval(s: &StochasticSystem, z: LogPoint) -> f64 {
    s.iter()
        .map(|(m, p)| rat_to_f64(p) * m.local_green(z))
        .collect::<CompensatedSum>()
        .value()
}

/// A Green's function value with its Monte Carlo standard error (zero when
/// the words were enumerated exactly).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GreenValue {
    pub value: f64,
    pub stderr: f64,
}

/// `g_S` for one system and configuration, with the value at infinity
/// computed once.
#[derive(Debug, Clone)]
pub struct GreenFunction<'a> {
    s: &'a StochasticSystem,
    cfg: GreenConfig,
    ln_prob: Vec<f64>,
    at_infinity: GreenValue,
}

impl<'a> GreenFunction<'a> {
    pub fn new(s: &'a StochasticSystem, cfg: GreenConfig) -> Result<Self> {
        cfg.validate(s)?;
        let mut g = Self {
            s,
            cfg,
            ln_prob: s.probs_f64().iter().map(|p| p.ln()).collect(),
            at_infinity: GreenValue {
                value: 0.0,
                stderr: 0.0,
            },
        };
        g.at_infinity = g.escape(LogPoint::INFINITY)?;
        Ok(g)
    }

    pub fn config(&self) -> &GreenConfig {
        &self.cfg
    }

    fn exact_words(&self) -> bool {
        self.s.check_word_count(self.cfg.depth, GREEN_WORD_CAP).is_ok()
    }

    /// Expected renormalized escape sum, before normalization at infinity.
    fn escape(&self, z: LogPoint) -> Result<GreenValue> {
        let (x, y) = z.homogeneous();
        if self.exact_words() {
            let mut acc = CompensatedSum::new();
            self.walk(x, y, self.cfg.depth, 0.0, 1.0, &mut acc);
            return Ok(GreenValue {
                value: acc.value(),
                stderr: 0.0,
            });
        }
        let chunks = run_workers(self.cfg.seed, self.cfg.samples, DEFAULT_WORKERS, |_, rng, count| {
            let mut st = RunningStats::default();
            for _ in 0..count {
                let (mut x, mut y) = (x, y);
                let mut inv_deg = 1.0;
                let mut sum = CompensatedSum::new();
                for _ in 0..self.cfg.depth {
                    let i = self.s.sample_map(rng);
                    let m = self.s.map(i);
                    let (nx, ny, lnm) = m.apply_homogeneous(x, y);
                    inv_deg /= m.degree() as f64;
                    sum.add(inv_deg * lnm);
                    x = nx;
                    y = ny;
                }
                st.push(sum.value());
            }
            st
        });
        let mut st = RunningStats::default();
        for c in &chunks {
            st.merge(c);
        }
        Ok(GreenValue {
            value: st.mean,
            stderr: st.stderr(),
        })
    }

    fn walk(&self, x: Complex64, y: Complex64, rest: usize, lw: f64, inv_deg: f64, acc: &mut CompensatedSum) {
        if rest == 0 {
            return;
        }
        for (i, m) in self.s.maps().iter().enumerate() {
            let (nx, ny, lnm) = m.apply_homogeneous(x, y);
            let lw = lw + self.ln_prob[i];
            let inv_deg = inv_deg / m.degree() as f64;
            acc.add(lw.exp() * inv_deg * lnm);
            self.walk(nx, ny, rest - 1, lw, inv_deg, acc);
        }
    }

    /// `g_S(z)` normalized by `g_S(inf) = 0`.
    pub fn eval(&self, z: LogPoint) -> Result<GreenValue> {
        let e = self.escape(z)?;
        Ok(GreenValue {
            value: e.value - self.at_infinity.value,
            stderr: e.stderr.hypot(self.at_infinity.stderr),
        })
    }

    /// `p_rho(z) = g_S(z) + ln+|z|`.
    pub fn potential(&self, z: LogPoint) -> Result<f64> {
        Ok(self.eval(z)?.value + z.log_plus())
    }
}

/// `g_S(z)` with `g_S(inf) = 0`.
pub fn gs_eval(s: &StochasticSystem, z: LogPoint, cfg: &GreenConfig) -> Result<f64> {
    Ok(GreenFunction::new(s, cfg.clone())?.eval(z)?.value)
}

/// `p_rho(z) = g_S(z) + ln+|z|`.
pub fn potential_eval(s: &StochasticSystem, z: LogPoint, cfg: &GreenConfig) -> Result<f64> {
    GreenFunction::new(s, cfg.clone())?.potential(z)
}

/// Samples of `rho_n`: a uniform point of the unit circle pulled back by
/// `n` random backward steps.
pub fn canonical_sample(s: &StochasticSystem, n: usize, samples: usize, seed: u64) -> Result<OrbitSampleBatch> {
    sample_paths(
        s,
        |rng| LogPoint::new(0.0, rng.gen_range(0.0..TAU)),
        n,
        samples,
        seed,
    )
}

/// Sorted sample values defining an empirical distribution function.
#[derive(Debug, Clone, PartialEq)]
pub struct EmpiricalCDF {
    values: Vec<f64>,
}

impl EmpiricalCDF {
    pub fn new(mut values: Vec<f64>) -> Self {
        values.sort_by(f64::total_cmp);
        Self { values }
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    /// Fraction of samples `<= x`.
    pub fn eval(&self, x: f64) -> f64 {
        if self.values.is_empty() {
            return 0.0;
        }
        self.values.partition_point(|&v| v <= x) as f64 / self.values.len() as f64
    }

    /// Kolmogorov-Smirnov distance to a distribution function given as
    /// `x -> (F(x-), F(x))`, exact for distributions with atoms.
    pub fn ks_against<F: Fn(f64) -> (f64, f64)>(&self, cdf: F) -> f64 {
        let n = self.values.len() as f64;
        let mut d: f64 = 0.0;
        let mut i = 0;
        while i < self.values.len() {
            let x = self.values[i];
            let mut j = i;
            while j < self.values.len() && self.values[j] == x {
                j += 1;
            }
            let (left, at) = cdf(x);
            d = d.max((i as f64 / n - left).abs()).max((j as f64 / n - at).abs());
            i = j;
        }
        d
    }

    /// KS distance to a continuous distribution function.
    pub fn ks_continuous<F: Fn(f64) -> f64>(&self, cdf: F) -> f64 {
        self.ks_against(|x| {
            let f = cdf(x);
            (f, f)
        })
    }

    /// Two-sample KS distance.
    pub fn ks_two_sample(&self, other: &EmpiricalCDF) -> f64 {
        let (a, b) = (&self.values, &other.values);
        let (na, nb) = (a.len() as f64, b.len() as f64);
        let (mut i, mut j) = (0, 0);
        let mut d: f64 = 0.0;
        while i < a.len() && j < b.len() {
            let x = a[i].min(b[j]);
            while i < a.len() && a[i] <= x {
                i += 1;
            }
            while j < b.len() && b[j] <= x {
                j += 1;
            }
            d = d.max((i as f64 / na - j as f64 / nb).abs());
        }
        d
    }
}

/// Relative half-width of the window counted as "at" a point mass.
pub const POINT_MASS_WINDOW: f64 = 1e-6;

/// Closed-form law of `|z|` under the canonical measure.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum RadialLaw {
    /// All mass on the circle of this radius.
    Circle(f64),
    /// `ln |z|` uniform on `[lo, hi]`.
    LogUniform { lo: f64, hi: f64 },
}

impl RadialLaw {
    /// `(F(r-), F(r))`.
    pub fn cdf(&self, r: f64) -> (f64, f64) {
        match *self {
            RadialLaw::Circle(r0) => {
                let lo = r0 * (1.0 - POINT_MASS_WINDOW);
                let hi = r0 * (1.0 + POINT_MASS_WINDOW);
                if r < lo {
                    (0.0, 0.0)
                } else if r <= hi {
                    // the window counts as the atom
                    (0.0, 1.0)
                } else {
                    (1.0, 1.0)
                }
            }
            RadialLaw::LogUniform { lo, hi } => {
                let f = ((r.ln() - lo) / (hi - lo)).clamp(0.0, 1.0);
                (f, f)
            }
        }
    }
}

/// The radial law of the canonical measure when the system is a digit
/// system: maps `a_j z^d` (one common degree `d`) whose coefficients have
/// `ln|a_j| = j c` for `j = 0..d-1`, each with probability `1/d`. Then
/// `ln |z|` is uniform on the interval between `0` and `-c`. A system whose
/// maps all share one `|a|` has its canonical measure on a single circle.
pub fn closed_form_radial(s: &StochasticSystem) -> Option<RadialLaw> {
    let sys = LogAffineSystem::at_place(s, PlaceQ::Arch)?;
    let monos: Vec<_> = s.maps().iter().map(|m| m.monomial()).collect::<Option<_>>()?;
    if monos.iter().any(|m| m.inverted) {
        return None;
    }
    let d = monos[0].degree;
    if monos.iter().any(|m| m.degree != d) {
        return None;
    }
    let shifts: Vec<f64> = (0..s.len()).map(|i| -sys.backward(i, 0.0) * d as f64).collect();
    let first = shifts[0];
    if shifts.iter().all(|c| (c - first).abs() < 1e-14 * (1.0 + first.abs())) {
        // every map fixes the same circle
        return Some(RadialLaw::Circle((-first / (d as f64 - 1.0)).exp()));
    }
    // group probabilities by shift and compare with the digit pattern
    let mut mass: Vec<(f64, f64)> = Vec::new();
    for (c, p) in shifts.iter().zip(s.probs_f64()) {
        match mass.iter_mut().find(|(x, _)| (x - c).abs() < 1e-12 * (1.0 + c.abs())) {
            Some(e) => e.1 += p,
            None => mass.push((*c, *p)),
        }
    }
    if mass.len() != d {
        return None;
    }
    mass.sort_by(|a, b| a.0.abs().total_cmp(&b.0.abs()));
    let step = mass[1].0;
    let digit = mass.iter().enumerate().all(|(j, (c, p))| {
        (c - j as f64 * step).abs() < 1e-12 * (1.0 + c.abs()) && (p - 1.0 / d as f64).abs() < 1e-12
    });
    if !digit {
        return None;
    }
    let span = -step;
    let (lo, hi) = if span < 0.0 { (span, 0.0) } else { (0.0, span) };
    Some(RadialLaw::LogUniform { lo, hi })
}

/// `pullback` residual: KS distance between the radial laws of `rho_n` and
/// `rho_{n+1}`, drawn with independent seeds.
pub fn pullback_invariance_residual(s: &StochasticSystem, n: usize, samples: usize, seed: u64) -> Result<f64> {
    let a = EmpiricalCDF::new(canonical_sample(s, n, samples, seed)?.radii());
    let b = EmpiricalCDF::new(canonical_sample(s, n + 1, samples, seed.wrapping_add(1))?.radii());
    Ok(a.ks_two_sample(&b))
}

/// Energy terms of an epsilon-regularized discrete measure.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RegularizedEnergy {
    /// `sum t_i^2 (-ln eps)`.
    pub self_energy: f64,
    /// `sum_{i != j} t_i t_j E_ij`.
    pub mutual_energy: f64,
    pub total: f64,
}

fn adaptive_simpson<F: Fn(f64) -> f64>(f: &F, a: f64, b: f64, tol: f64) -> Result<f64> {
    fn rec<F: Fn(f64) -> f64>(
        f: &F,
        a: f64,
        b: f64,
        fa: f64,
        fm: f64,
        fb: f64,
        whole: f64,
        tol: f64,
        depth: u32,
    ) -> Result<f64> {
        let m = 0.5 * (a + b);
        let (lm, rm) = (0.5 * (a + m), 0.5 * (m + b));
        let (flm, frm) = (f(lm), f(rm));
        let left = (m - a) / 6.0 * (fa + 4.0 * flm + fm);
        let right = (b - m) / 6.0 * (fm + 4.0 * frm + fb);
        let delta = left + right - whole;
        if delta.abs() <= 15.0 * tol {
            return Ok(left + right + delta / 15.0);
        }
        if depth == 0 {
            return Err(Error::QuadratureFailure(format!(
                "no convergence on [{a}, {b}] (error estimate {:e})",
                delta.abs() / 15.0
            )));
        }
        Ok(rec(f, a, m, fa, flm, fm, left, tol / 2.0, depth - 1)?
            + rec(f, m, b, fm, frm, fb, right, tol / 2.0, depth - 1)?)
    }
    // start from a few panels so that narrow features are not skipped
    let panels = 16;
    let h = (b - a) / panels as f64;
    let mut total = CompensatedSum::new();
    for k in 0..panels {
        let (x0, x1) = (a + k as f64 * h, a + (k + 1) as f64 * h);
        let (f0, f1, fmid) = (f(x0), f(x1), f(0.5 * (x0 + x1)));
        let w = h / 6.0 * (f0 + 4.0 * fmid + f1);
        total.add(rec(f, x0, x1, f0, fmid, f1, w, tol / panels as f64, 40)?);
    }
    Ok(total.value())
}

/// Mutual energy of the uniform measures on the circles of radius `eps`
/// about `z` and `w`: `-(1/2pi) int ln max(|z + eps e^{is} - w|, eps) ds`.
pub fn circle_mutual_energy(z: Complex64, w: Complex64, eps: f64) -> Result<f64> {
    let u = z - w;
    let f = |s: f64| -(u + Complex64::from_polar(eps, s)).norm().max(eps).ln();
    Ok(adaptive_simpson(&f, 0.0, TAU, 1e-12)? / TAU)
}

/// Energy `(Delta_eps, Delta_eps)` of the epsilon-regularization of a
/// measure with finite support: every atom is replaced by the uniform
/// measure on the circle of radius `eps` about it.
pub fn regularize(atoms: &[(Complex64, f64)], eps: f64) -> Result<RegularizedEnergy> {
    if !(eps > 0.0 && eps <= 1.0) {
        return Err(Error::InvalidArgument(format!("eps = {eps} is outside (0, 1]")));
    }
    let mut self_energy = CompensatedSum::new();
    let mut mutual = CompensatedSum::new();
    for (i, (z, t)) in atoms.iter().enumerate() {
        self_energy.add(t * t * -eps.ln());
        for (w, s) in &atoms[i + 1..] {
            mutual.add(2.0 * t * s * circle_mutual_energy(*z, *w, eps)?);
        }
    }
    let (a, b) = (self_energy.value(), mutual.value());
    Ok(RegularizedEnergy {
        self_energy: a,
        mutual_energy: b,
        total: a + b,
    })
}

/// Probe points for sup/inf searches: shells of radius `e^t` for `t`
/// evenly spaced in `[log_r_min, log_r_max]`, a fixed number of angles per
/// shell, plus 0 and infinity.
#[derive(Debug, Clone, PartialEq)]
pub struct ProbeSet {
    pub shells: usize,
    pub angles: usize,
    pub log_r_min: f64,
    pub log_r_max: f64,
}

impl Default for ProbeSet {
    fn default() -> Self {
        Self {
            shells: 64,
            angles: 64,
            log_r_min: -3.0,
            log_r_max: 3.0,
        }
    }
}

impl ProbeSet {
    pub fn points(&self) -> Vec<LogPoint> {
        let mut out = vec![LogPoint::ZERO, LogPoint::INFINITY];
        for i in 0..self.shells {
            let t = if self.shells == 1 {
                self.log_r_min
            } else {
                self.log_r_min + (self.log_r_max - self.log_r_min) * i as f64 / (self.shells - 1) as f64
            };
            for j in 0..self.angles {
                out.push(LogPoint::new(t, TAU * j as f64 / self.angles as f64));
            }
        }
        out
    }
}

/// Parameters of the radii computation.
#[derive(Debug, Clone, PartialEq)]
pub struct RadiiConfig {
    pub green: GreenConfig,
    pub probes: ProbeSet,
    /// Canonical samples used to estimate `(rho, rho)`.
    pub energy_samples: usize,
    pub energy_depth: usize,
}

impl RadiiConfig {
    pub fn for_tolerance(s: &StochasticSystem, tol: f64) -> Result<Self> {
        Ok(Self {
            green: GreenConfig::for_tolerance(s, tol)?,
            probes: ProbeSet::default(),
            energy_samples: 4000,
            energy_depth: 30,
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Radii {
    pub r_in: f64,
    pub r_out: f64,
    /// Estimate of the self-energy `(rho, rho)`.
    pub energy: f64,
    pub energy_stderr: f64,
}

/// Inner and outer radii `exp inf(-g~)` and `exp sup(-g~)` of the
/// recentred Green's function `g~ = g_S + (rho, rho)/2`.
pub fn radii(s: &StochasticSystem, cfg: &RadiiConfig) -> Result<Radii> {
    let g = GreenFunction::new(s, cfg.green.clone())?;
    let pts = canonical_sample(s, cfg.energy_depth, cfg.energy_samples, cfg.green.seed)?;
    let pot: Vec<f64> = pts
        .points
        .par_iter()
        .map(|w| g.potential(*w))
        .collect::<Result<_>>()?;
    let mut st = RunningStats::default();
    for p in &pot {
        st.push(*p);
    }
    let energy = -st.mean;
    let vals: Vec<f64> = cfg
        .probes
        .points()
        .par_iter()
        .map(|z| g.eval(*z).map(|v| v.value))
        .collect::<Result<_>>()?;
    let lo = vals.iter().cloned().fold(f64::INFINITY, f64::min);
    let hi = vals.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let half = energy / 2.0;
    Ok(Radii {
        r_in: (-hi - half).exp(),
        r_out: (-lo - half).exp(),
        energy,
        energy_stderr: st.stderr(),
    })
}

/// Where the reference radial law came from.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ReferenceKind {
    ClosedForm,
    /// Canonical sampling with four times the test sample count.
    Sampled,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ArchEquidist {
    pub ks_radial: f64,
    pub ks_angular: f64,
    pub potential_residual: f64,
    pub reference: ReferenceKind,
    /// Factor applied to acceptance thresholds (2 for sampled references).
    pub threshold_factor: f64,
    pub empirical: EmpiricalCDF,
    pub reference_law: Option<RadialLaw>,
    pub reference_sample: Option<EmpiricalCDF>,
}

/// Probes for the potential comparison: the origin, eight points on the
/// circle of radius 2 and the point 10.
pub fn potential_probes() -> Vec<LogPoint> {
    let mut out = vec![LogPoint::ZERO];
    out.extend((0..8).map(|k| LogPoint::new(2f64.ln(), PI * k as f64 / 4.0)));
    out.push(LogPoint::new(10f64.ln(), 0.0));
    out
}

/// `ln |u - w|` computed in log scale when the magnitudes differ widely.
fn ln_dist(u: LogPoint, w: LogPoint) -> f64 {
    if w.is_infinity() || u.is_infinity() {
        return f64::INFINITY;
    }
    if w.log_abs > u.log_abs.max(0.0) + 40.0 {
        return w.log_abs;
    }
    if u.log_abs > w.log_abs.max(0.0) + 40.0 {
        return u.log_abs;
    }
    (u.to_complex() - w.to_complex()).norm().ln()
}

/// Compares samples of `Delta_{n,alpha}` with the canonical measure.
pub fn equidist_test_arch(
    s: &StochasticSystem,
    alpha: &ProjPointQ,
    n: usize,
    samples: usize,
    seed: u64,
) -> Result<ArchEquidist> {
    if s.is_exceptional(alpha)? {
        return Err(Error::ExceptionalStart);
    }
    let batch = backward_sample(s, alpha, n, samples, seed)?;
    let empirical = EmpiricalCDF::new(batch.radii());
    let angular = EmpiricalCDF::new(batch.angles());
    let ks_angular = angular.ks_continuous(|t| (t / TAU).clamp(0.0, 1.0));
    let (ks_radial, reference, threshold_factor, reference_law, reference_sample) = match closed_form_radial(s) {
        Some(law) => (empirical.ks_against(|r| law.cdf(r)), ReferenceKind::ClosedForm, 1.0, Some(law), None),
        None => {
            let refs = canonical_sample(s, n, 4 * samples, seed.wrapping_add(0x9e37_79b9))?;
            let r = EmpiricalCDF::new(refs.radii());
            (empirical.ks_two_sample(&r), ReferenceKind::Sampled, 2.0, None, Some(r))
        }
    };
    let cfg = GreenConfig::for_tolerance(s, 1e-4)?;
    let g = GreenFunction::new(s, cfg)?;
    let mut potential_residual: f64 = 0.0;
    for u in potential_probes() {
        let emp = batch
            .points
            .par_iter()
            .map(|w| ln_dist(u, *w))
            .sum::<f64>()
            / batch.points.len() as f64;
        potential_residual = potential_residual.max((emp - g.potential(u)?).abs());
    }
    Ok(ArchEquidist {
        ks_radial,
        ks_angular,
        potential_residual,
        reference,
        threshold_factor,
        empirical,
        reference_law,
        reference_sample,
    })
}

/// CSV with columns `r,empirical_cdf,reference_cdf` on `points` radii
/// spanning the samples.
pub fn write_radial_csv<W: Write>(res: &ArchEquidist, points: usize, mut out: W) -> std::io::Result<()> {
    writeln!(out, "r,empirical_cdf,reference_cdf")?;
    let v = res.empirical.values();
    if v.is_empty() {
        return Ok(());
    }
    let (lo, hi) = (v[0], v[v.len() - 1]);
    let points = points.max(2);
    for k in 0..points {
        let r = lo + (hi - lo) * k as f64 / (points - 1) as f64;
        let reference = match (&res.reference_law, &res.reference_sample) {
            (Some(law), _) => law.cdf(r).1,
            (None, Some(sample)) => sample.eval(r),
            (None, None) => f64::NAN,
        };
        writeln!(out, "{r:e},{:e},{reference:e}", res.empirical.eval(r))?;
    }
    Ok(())
}
