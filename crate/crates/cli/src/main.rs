//! `stochdyn` command-line tool.
//!
//! Exit codes: 0 success, 1 computation failure or failed suite criterion,
//! 2 unreadable or malformed input, 3 invalid system, 4 exceptional start.

mod commands;
mod config;
mod error;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use serde_json::Value;

use crate::commands::{parse_complex, parse_point, record, Params};
use crate::config::LoadedConfig;
use crate::error::CliError;

#[derive(Debug, Parser)]
#[command(name = "stochdyn", version, about = "Stochastic dynamical heights and equidistribution diagnostics")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Args)]
struct Common {
    /// System configuration (JSON).
    #[arg(long)]
    config: PathBuf,
    /// Seed for every random choice (overrides the config).
    #[arg(long)]
    seed: Option<u64>,
    /// Iteration depth (overrides the config).
    #[arg(long)]
    depth: Option<usize>,
    /// Number of samples (overrides the config).
    #[arg(long)]
    samples: Option<usize>,
    /// Target tolerance (overrides the config).
    #[arg(long)]
    tol: Option<f64>,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Check a configuration and report degrees, resultants, bad primes,
    /// stochastic degree, the C_S budget and the exceptional set.
    Validate {
        #[command(flatten)]
        common: Common,
    },
    /// Weil height and local heights of a rational point.
    Height {
        /// Point as "a/b", "a" or "inf".
        #[arg(long)]
        alpha: String,
    },
    /// Stochastic height of a rational point to the requested tolerance.
    StochHeight {
        #[command(flatten)]
        common: Common,
        #[arg(long)]
        alpha: String,
    },
    /// Sample random backward orbits; CSV columns index,re,im,log_abs,depth.
    OrbitSample {
        #[command(flatten)]
        common: Common,
        #[arg(long, default_value = "1")]
        alpha: String,
        /// CSV output file.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Equidistribution test at a place; CSV columns r (or v),
    /// empirical_cdf, reference_cdf.
    Equidist {
        #[command(flatten)]
        common: Common,
        /// "arch" or a prime.
        #[arg(long, default_value = "arch")]
        place: String,
        #[arg(long, default_value = "1")]
        alpha: String,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Green's function, potential and first-level potential at a point.
    GreenEval {
        #[command(flatten)]
        common: Common,
        /// Point as "re,im", a real number, "a/b" or "inf".
        #[arg(long, allow_hyphen_values = true)]
        z: String,
    },
    /// Inner and outer radii of the archimedean Julia set.
    Radii {
        #[command(flatten)]
        common: Common,
    },
    /// Run the acceptance battery on the configured system.
    Suite {
        #[command(flatten)]
        common: Common,
        /// Also write the JSON summary to this file.
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

fn load(common: &Common) -> Result<(LoadedConfig, Params), CliError> {
    let cfg = LoadedConfig::load(&common.config)?;
    let params = Params::resolve(Some(&cfg), common.seed, common.depth, common.samples, common.tol)?;
    Ok((cfg, params))
}

fn emit(v: &Value) {
    println!("{}", serde_json::to_string_pretty(v).expect("JSON values serialize"));
}

fn run(cli: Cli) -> Result<bool, CliError> {
    match cli.command {
        Command::Validate { common } => {
            let (cfg, p) = load(&common)?;
            emit(&record("validate", Some(&cfg), p.seed, commands::validate(&cfg)?));
        }
        Command::Height { alpha } => {
            let alpha = parse_point(&alpha)?;
            emit(&record("height", None, 0, commands::height(&alpha)?));
        }
        Command::StochHeight { common, alpha } => {
            let (cfg, p) = load(&common)?;
            let s = cfg.system()?;
            let alpha = parse_point(&alpha)?;
            emit(&record("stoch-height", Some(&cfg), p.seed, commands::stoch_height(&s, &alpha, &p)?));
        }
        Command::OrbitSample { common, alpha, out } => {
            let (cfg, p) = load(&common)?;
            let s = cfg.system()?;
            let alpha = parse_point(&alpha)?;
            let body = commands::orbit_sample(&s, &alpha, &p, out.as_deref())?;
            emit(&record("orbit-sample", Some(&cfg), p.seed, body));
        }
        Command::Equidist { common, place, alpha, out } => {
            let (cfg, p) = load(&common)?;
            let s = cfg.system()?;
            let alpha = parse_point(&alpha)?;
            let body = commands::equidist(&s, &place, &alpha, &p, out.as_deref())?;
            emit(&record("equidist", Some(&cfg), p.seed, body));
        }
        Command::GreenEval { common, z } => {
            let (cfg, p) = load(&common)?;
            let s = cfg.system()?;
            let z = parse_complex(&z)?;
            let body = commands::green_eval(&s, z, cfg.config.precision, &p)?;
            emit(&record("green-eval", Some(&cfg), p.seed, body));
        }
        Command::Radii { common } => {
            let (cfg, p) = load(&common)?;
            let s = cfg.system()?;
            emit(&record("radii", Some(&cfg), p.seed, commands::radii(&s, &p)?));
        }
        Command::Suite { common, out } => {
            let (cfg, p) = load(&common)?;
            let s = cfg.system()?;
            let (body, passed) = commands::suite(s, &p)?;
            let rec = record("suite", Some(&cfg), p.seed, body);
            if let Some(path) = out {
                let text = serde_json::to_string_pretty(&rec).expect("JSON values serialize");
                std::fs::write(path, text + "\n")?;
            }
            emit(&rec);
            return Ok(passed);
        }
    }
    Ok(true)
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { ExitCode::from(2) } else { ExitCode::SUCCESS };
        }
    };
    match run(cli) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(1),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}
