//! Command implementations. Every command prints one JSON record to stdout
//! carrying the tool version, the SHA-256 of the configuration file and the
//! seed; bulk data goes to the CSV file named by `--out`.

use std::collections::BTreeSet;
use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::Path;

use num_bigint::BigInt;
use serde_json::{json, Value};
use stochdyn::archpotential::{
    equidist_test_arch, g1_eval, write_radial_csv, GreenConfig, GreenFunction, RadialLaw, RadiiConfig,
    ReferenceKind,
};
use stochdyn::dynsys::{exceptional_set, StochasticSystem};
use stochdyn::exactnum::{factor_int, rat_to_f64, ComplexVal, LogPoint, ProjPointQ};
use stochdyn::heights::{l1_height_control_total, local_height, weil_height, PlaceQ};
use stochdyn::orbits::backward_sample;
use stochdyn::padicmodel::{equidist_test_padic, write_segment_csv, PlaceClass};
use stochdyn::stochheight::stoch_height_seeded;
use stochdyn::suite::{run_criterion, SuiteConfig, CRITERIA};

use crate::config::LoadedConfig;
use crate::error::CliError;

/// Rows in CDF dumps.
const CDF_ROWS: usize = 1000;

/// Factoring budget (bits) for the primes listed by `height`.
const HEIGHT_FACTOR_BITS: u64 = 256;

/// Run parameters after applying command-line overrides to the config.
#[derive(Debug, Clone)]
pub struct Params {
    pub seed: u64,
    pub depth: usize,
    pub samples: usize,
    pub tol: f64,
}

impl Params {
    pub fn resolve(
        cfg: Option<&LoadedConfig>,
        seed: Option<u64>,
        depth: Option<usize>,
        samples: Option<usize>,
        tol: Option<f64>,
    ) -> Result<Self, CliError> {
        let base = cfg.map(|c| &c.config);
        let p = Self {
            seed: seed.or(base.map(|c| c.seed)).unwrap_or(0),
            depth: depth.or(base.map(|c| c.depth)).unwrap_or(30),
            samples: samples.or(base.map(|c| c.samples)).unwrap_or(100_000),
            tol: tol.or(base.map(|c| c.tol)).unwrap_or(1e-3),
        };
        if !(p.tol > 0.0) {
            return Err(CliError::Parse("--tol must be positive".into()));
        }
        Ok(p)
    }
}

pub fn record(command: &str, cfg: Option<&LoadedConfig>, seed: u64, body: Value) -> Value {
    json!({
        "command": command,
        "version": env!("CARGO_PKG_VERSION"),
        "config_sha256": cfg.map(|c| c.sha256.clone()),
        "seed": seed,
        "result": body,
    })
}

pub fn parse_point(text: &str) -> Result<ProjPointQ, CliError> {
    text.parse::<ProjPointQ>().map_err(|e| CliError::Parse(e.to_string()))
}

/// Parses `"re,im"`, a real number, a rational `"a/b"` or `"inf"`.
pub fn parse_complex(text: &str) -> Result<LogPoint, CliError> {
    let t = text.trim();
    let bad = || CliError::Parse(format!("cannot parse complex number {t:?}"));
    if let Some((re, im)) = t.split_once(',') {
        let re: f64 = re.trim().parse().map_err(|_| bad())?;
        let im: f64 = im.trim().parse().map_err(|_| bad())?;
        return Ok(LogPoint::from_complex(ComplexVal::new(re, im)));
    }
    if let Ok(x) = t.parse::<f64>() {
        if x.is_finite() {
            return Ok(LogPoint::from_complex(ComplexVal::new(x, 0.0)));
        }
    }
    Ok(parse_point(t).map_err(|_| bad())?.to_log_point())
}

fn csv_writer(path: &Path) -> Result<BufWriter<File>, CliError> {
    Ok(BufWriter::new(File::create(path)?))
}

fn place_name(v: PlaceQ) -> String {
    match v {
        PlaceQ::Arch => "inf".into(),
        PlaceQ::Prime(p) => p.to_string(),
    }
}

pub fn validate(cfg: &LoadedConfig) -> Result<Value, CliError> {
    let s = cfg.system()?;
    let mut maps = Vec::new();
    let mut bad: BTreeSet<BigInt> = BTreeSet::new();
    for (k, m) in s.maps().iter().enumerate() {
        let primes = m.bad_primes()?;
        bad.extend(primes.iter().map(|p| BigInt::from(p.clone())));
        maps.push(json!({
            "index": k,
            "map": m.describe(),
            "degree": m.degree(),
            "resultant": m.resultant().to_string(),
            "bad_primes": primes.iter().map(|p| p.to_string()).collect::<Vec<_>>(),
            "prob": s.probs()[k].to_string(),
        }));
    }
    let l1 = l1_height_control_total(&s)?;
    let per_place: serde_json::Map<String, Value> =
        l1.per_place.iter().map(|(v, c)| (place_name(*v), json!(c))).collect();
    let e = exceptional_set(&s)?;
    Ok(json!({
        "valid": true,
        "maps": maps,
        "bad_primes": bad.iter().map(|p| p.to_string()).collect::<Vec<_>>(),
        "stochastic_degree": s.stochastic_degree().to_string(),
        "stochastic_degree_f64": rat_to_f64(&s.stochastic_degree()),
        "cs_integral": l1.total,
        "cs_per_place": per_place,
        "exceptional_set": e.points.iter().map(|p| p.to_string()).collect::<Vec<_>>(),
        "exceptional_unresolved": e.unresolved.iter().map(|q| format!("{:?}", q.coeffs().iter().map(|c| c.to_string()).collect::<Vec<_>>())).collect::<Vec<_>>(),
    }))
}

pub fn height(alpha: &ProjPointQ) -> Result<Value, CliError> {
    let mut local = serde_json::Map::new();
    if !alpha.is_infinity() {
        local.insert("inf".into(), json!(local_height(alpha, PlaceQ::Arch)?));
        for p in factor_int(alpha.b(), HEIGHT_FACTOR_BITS)?.keys() {
            let p: u64 = p
                .try_into()
                .map_err(|_| CliError::Runtime(format!("prime {p} exceeds 64 bits")))?;
            local.insert(p.to_string(), json!(local_height(alpha, PlaceQ::prime(p)?)?));
        }
    }
    Ok(json!({
        "alpha": alpha.to_string(),
        "weil_height": weil_height(alpha),
        "local_heights": local,
    }))
}

pub fn stoch_height(s: &StochasticSystem, alpha: &ProjPointQ, p: &Params) -> Result<Value, CliError> {
    let e = stoch_height_seeded(s, alpha, p.tol, p.seed)?;
    Ok(json!({
        "alpha": alpha.to_string(),
        "tol": p.tol,
        "value": e.value,
        "stderr": e.stderr,
        "tail_bound": e.tail_bound,
        "depth": e.depth,
        "mode": e.mode.as_str(),
        "samples": e.samples,
    }))
}

pub fn orbit_sample(
    s: &StochasticSystem,
    alpha: &ProjPointQ,
    p: &Params,
    out: Option<&Path>,
) -> Result<Value, CliError> {
    let batch = backward_sample(s, alpha, p.depth, p.samples, p.seed)?;
    if let Some(path) = out {
        let mut w = csv_writer(path)?;
        batch.write_csv(&mut w)?;
        w.flush()?;
    }
    let radii = batch.radii();
    let n = radii.len().max(1) as f64;
    let mean_log_abs = batch.points.iter().map(|z| z.log_abs).sum::<f64>() / n;
    Ok(json!({
        "alpha": alpha.to_string(),
        "depth": batch.depth,
        "samples": batch.samples,
        "mean_log_abs": mean_log_abs,
        "min_abs": radii.iter().copied().fold(f64::INFINITY, f64::min),
        "max_abs": radii.iter().copied().fold(0.0, f64::max),
    }))
}

/// `--place` is `arch` (also `inf`) or a prime.
pub fn equidist(
    s: &StochasticSystem,
    place: &str,
    alpha: &ProjPointQ,
    p: &Params,
    out: Option<&Path>,
) -> Result<Value, CliError> {
    let place = place.trim();
    if place.eq_ignore_ascii_case("arch") || place.eq_ignore_ascii_case("inf") {
        let r = equidist_test_arch(s, alpha, p.depth, p.samples, p.seed)?;
        if let Some(path) = out {
            let mut w = csv_writer(path)?;
            write_radial_csv(&r, CDF_ROWS, &mut w)?;
            w.flush()?;
        }
        let law = match r.reference_law {
            Some(RadialLaw::Circle(radius)) => json!({"kind": "circle", "radius": radius}),
            Some(RadialLaw::LogUniform { lo, hi }) => json!({"kind": "log_uniform", "log_lo": lo, "log_hi": hi}),
            None => Value::Null,
        };
        return Ok(json!({
            "place": "arch",
            "alpha": alpha.to_string(),
            "depth": p.depth,
            "samples": p.samples,
            "ks_radial": r.ks_radial,
            "ks_angular": r.ks_angular,
            "potential_residual": r.potential_residual,
            "reference": match r.reference {
                ReferenceKind::ClosedForm => "closed_form",
                ReferenceKind::Sampled => "sampled",
            },
            "reference_law": law,
            "threshold_factor": r.threshold_factor,
        }));
    }
    let prime: u64 = place
        .parse()
        .map_err(|_| CliError::Parse(format!("--place must be 'arch' or a prime, got {place:?}")))?;
    let r = equidist_test_padic(s, prime, alpha, p.depth, p.samples, p.seed)?;
    if let Some(path) = out {
        let mut w = csv_writer(path)?;
        write_segment_csv(&r, CDF_ROWS, &mut w)?;
        w.flush()?;
    }
    let class = match &r.class {
        PlaceClass::GoodReduction => json!("good_reduction"),
        PlaceClass::MonomialLike(maps) => {
            json!({"monomial_like": maps.iter().map(|m| m.to_string()).collect::<Vec<_>>()})
        }
        PlaceClass::Unsupported => json!("unsupported"),
    };
    Ok(json!({
        "place": prime,
        "alpha": alpha.to_string(),
        "depth": r.depth,
        "samples": p.samples,
        "ks": r.ks,
        "class": class,
        "segment": [r.reference.v_lo + 0.0, r.reference.v_hi + 0.0],
    }))
}

pub fn green_eval(s: &StochasticSystem, z: LogPoint, precision: u32, p: &Params) -> Result<Value, CliError> {
    let mut gc = GreenConfig::for_tolerance(s, p.tol)?;
    gc.seed = p.seed;
    gc.precision = precision;
    let g = GreenFunction::new(s, gc)?;
    let v = g.eval(z)?;
    let c = z.to_complex();
    Ok(json!({
        "z": if z.is_infinity() { json!("inf") } else { json!([c.re, c.im]) },
        "g": v.value,
        "stderr": v.stderr,
        "potential": g.potential(z)?,
        "g1": g1_eval(s, z),
        "depth": g.config().depth,
        "tol": p.tol,
        "precision_requested": precision,
        "precision_bits": g.config().effective_precision(),
    }))
}

pub fn radii(s: &StochasticSystem, p: &Params) -> Result<Value, CliError> {
    let mut rc = RadiiConfig::for_tolerance(s, p.tol)?;
    rc.green.seed = p.seed;
    let r = stochdyn::archpotential::radii(s, &rc)?;
    Ok(json!({
        "r_in": r.r_in,
        "r_out": r.r_out,
        "energy": r.energy,
        "energy_stderr": r.energy_stderr,
        "tol": p.tol,
    }))
}

/// Runs the battery on the configured system, printing one line per
/// criterion; returns the JSON summary and whether every criterion passed.
pub fn suite(s: StochasticSystem, p: &Params) -> Result<(Value, bool), CliError> {
    let cfg = SuiteConfig {
        system: s,
        seed: p.seed,
        samples: p.samples,
        depth: p.depth,
    };
    let mut all = true;
    let mut rows = Vec::new();
    for id in 1..=CRITERIA {
        match run_criterion(id, &cfg) {
            Ok(r) => {
                eprintln!("{r}");
                all &= r.passed;
                rows.push(json!({
                    "id": r.id,
                    "title": r.title,
                    "passed": r.passed,
                    "value": r.value,
                    "threshold": r.threshold,
                    "detail": r.detail,
                }));
            }
            Err(e) => {
                eprintln!("[FAIL] {id:>2}. {}", e);
                all = false;
                rows.push(json!({"id": id, "passed": false, "error": e.to_string()}));
            }
        }
    }
    Ok((json!({"passed": all, "criteria": rows}), all))
}
