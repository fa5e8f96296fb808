//! System configuration files.
//!
//! ```json
//! {
//!   "maps": [
//!     {"num_coeffs": [0, 0, 1], "den_coeffs": [1], "prob": "1/2"},
//!     {"num_coeffs": [0, 0, 2], "den_coeffs": [1], "prob": "1/2"}
//!   ],
//!   "seed": 0, "depth": 30, "samples": 100000, "tol": 1e-3, "precision": 53
//! }
//! ```
//!
//! Coefficient `i` of `num_coeffs` / `den_coeffs` multiplies `z^i`. Large
//! coefficients may be given as decimal strings. Probabilities are exact
//! rationals written as strings.

use std::fs;
use std::path::Path;

use num_bigint::BigInt;
use serde::Deserialize;
use sha2::{Digest, Sha256};
use stochdyn::dynsys::{make_map, StochasticSystem};
use stochdyn::exactnum::{BigRat, IntPoly};

use crate::error::CliError;

#[derive(Debug, Clone, Deserialize)]
#[serde(untagged)]
pub enum Coeff {
    Int(i64),
    Text(String),
}

impl Coeff {
    fn to_bigint(&self) -> Result<BigInt, CliError> {
        match self {
            Coeff::Int(v) => Ok(BigInt::from(*v)),
            Coeff::Text(s) => s
                .trim()
                .parse()
                .map_err(|_| CliError::Parse(format!("invalid integer coefficient {s:?}"))),
        }
    }
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MapSpec {
    pub num_coeffs: Vec<Coeff>,
    pub den_coeffs: Vec<Coeff>,
    pub prob: String,
}

fn default_depth() -> usize {
    30
}

fn default_samples() -> usize {
    100_000
}

fn default_tol() -> f64 {
    1e-3
}

fn default_precision() -> u32 {
    53
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SystemConfig {
    pub maps: Vec<MapSpec>,
    #[serde(default)]
    pub seed: u64,
    #[serde(default = "default_depth")]
    pub depth: usize,
    #[serde(default = "default_samples")]
    pub samples: usize,
    #[serde(default = "default_tol")]
    pub tol: f64,
    /// Working precision in bits.
    #[serde(default = "default_precision")]
    pub precision: u32,
}

/// A parsed configuration together with the hash of the file it came from.
#[derive(Debug, Clone)]
pub struct LoadedConfig {
    pub config: SystemConfig,
    pub sha256: String,
}

impl LoadedConfig {
    pub fn load(path: &Path) -> Result<Self, CliError> {
        let bytes = fs::read(path)
            .map_err(|e| CliError::Parse(format!("cannot read {}: {e}", path.display())))?;
        Self::from_bytes(&bytes)
    }

    pub fn from_bytes(bytes: &[u8]) -> Result<Self, CliError> {
        let config: SystemConfig =
            serde_json::from_slice(bytes).map_err(|e| CliError::Parse(format!("invalid config: {e}")))?;
        let sha256 = Sha256::digest(bytes)
            .iter()
            .map(|b| format!("{b:02x}"))
            .collect();
        Ok(Self { config, sha256 })
    }

    /// Builds the stochastic system; map and probability problems are
    /// invariant violations, malformed numbers are parse errors.
    pub fn system(&self) -> Result<StochasticSystem, CliError> {
        let mut maps = Vec::with_capacity(self.config.maps.len());
        let mut probs = Vec::with_capacity(self.config.maps.len());
        for (k, spec) in self.config.maps.iter().enumerate() {
            let num = poly(&spec.num_coeffs)?;
            let den = poly(&spec.den_coeffs)?;
            let map = make_map(&num, &den).map_err(|e| CliError::Invariant(format!("map {k}: {e}")))?;
            let prob: BigRat = spec
                .prob
                .trim()
                .parse()
                .map_err(|_| CliError::Parse(format!("map {k}: invalid probability {:?}", spec.prob)))?;
            maps.push(map);
            probs.push(prob);
        }
        if !(self.config.tol > 0.0) {
            return Err(CliError::Invariant("tol must be positive".into()));
        }
        StochasticSystem::new(maps, probs).map_err(|e| CliError::Invariant(e.to_string()))
    }
}

fn poly(coeffs: &[Coeff]) -> Result<IntPoly, CliError> {
    Ok(IntPoly::new(coeffs.iter().map(Coeff::to_bigint).collect::<Result<_, _>>()?))
}

#[cfg(test)]
mod tests {
    use super::*;

    const EXAMPLE: &str = r#"{"maps": [
        {"num_coeffs": [0, 0, 1], "den_coeffs": [1], "prob": "1/2"},
        {"num_coeffs": [0, 0, "2"], "den_coeffs": [1], "prob": "1/2"}]}"#;

    #[test]
    fn parses_with_defaults() {
        let c = LoadedConfig::from_bytes(EXAMPLE.as_bytes()).unwrap();
        assert_eq!(c.config.depth, 30);
        assert_eq!(c.config.samples, 100_000);
        assert_eq!(c.sha256.len(), 64);
        let s = c.system().unwrap();
        assert_eq!(s.len(), 2);
    }

    #[test]
    fn probability_sum_is_an_invariant_violation() {
        let bad = EXAMPLE.replacen("1/2", "2/5", 1);
        let c = LoadedConfig::from_bytes(bad.as_bytes()).unwrap();
        assert!(matches!(c.system(), Err(CliError::Invariant(_))));
    }

    #[test]
    fn malformed_input_is_a_parse_error() {
        assert!(matches!(LoadedConfig::from_bytes(b"{"), Err(CliError::Parse(_))));
        let bad = EXAMPLE.replace("\"1/2\"", "\"half\"");
        let c = LoadedConfig::from_bytes(bad.as_bytes()).unwrap();
        assert!(matches!(c.system(), Err(CliError::Parse(_))));
    }
}
