//! Acceptance battery for the worked example system. Prints one line per
//! criterion and exits nonzero if a criterion fails unexpectedly.
//!
//! Criterion 5 (geometric decay of `h_S(Delta_n)`) cannot hold for this
//! system: pushing the backward-orbit measure forward by a random map does
//! not recover the previous level, and the atoms `2^x zeta` at level `n`
//! have `h_S = ln 2 (x^2 + (1 + x)^2) / 2`, so that
//! `h_S(Delta_n) = (ln 2 / 2)(2/3 + 4^-n / 3)`, which tends to `ln 2 / 3`.
//! The battery reports that criterion as failing and instead checks the
//! measured values against this closed form.

use std::f64::consts::LN_2;
use std::process::ExitCode;

use stochdyn::exactnum::ProjPointQ;
use stochdyn::orbits::{backward_tree, tree_stoch_height};
use stochdyn::suite::{run_criterion, SuiteConfig, CRITERIA};

const KNOWN_UNATTAINABLE: u32 = 5;

fn decay_matches_closed_form(cfg: &SuiteConfig) -> bool {
    let tree = match backward_tree(&cfg.system, &ProjPointQ::from_int(1), 6) {
        Ok(t) => t,
        Err(e) => {
            println!("       tree construction failed: {e}");
            return false;
        }
    };
    let mut ok = true;
    for n in 0..=6 {
        let h = tree_stoch_height(&cfg.system, &tree, n, 1e-6).unwrap_or(f64::NAN);
        let closed = LN_2 / 2.0 * (2.0 / 3.0 + 4f64.powi(-(n as i32)) / 3.0);
        let good = (h - closed).abs() < 1e-5;
        ok &= good;
        println!(
            "       n = {n}: h_S(Delta_n) = {h:.8}, closed form {closed:.8}, claimed bound {:.8}",
            LN_2 / 2.0 * 2f64.powi(-(n as i32)) + 1e-3
        );
    }
    ok
}

fn main() -> ExitCode {
    let cfg = SuiteConfig::default();
    let mut unexpected = 0;
    println!("acceptance battery: seed {}, {} samples, depth {}", cfg.seed, cfg.samples, cfg.depth);
    for id in 1..=CRITERIA {
        match run_criterion(id, &cfg) {
            Ok(r) => {
                println!("{r}");
                if id == KNOWN_UNATTAINABLE {
                    let consistent = decay_matches_closed_form(&cfg);
                    println!(
                        "       unattainable as stated; measured heights {} the closed form",
                        if consistent { "match" } else { "DO NOT match" }
                    );
                    if r.passed || !consistent {
                        unexpected += 1;
                    }
                } else if !r.passed {
                    unexpected += 1;
                }
            }
            Err(e) => {
                println!("[FAIL] {id:>2}. error: {e}");
                unexpected += 1;
            }
        }
    }
    if unexpected == 0 {
        println!("acceptance battery: all criteria behaved as expected");
        ExitCode::SUCCESS
    } else {
        println!("acceptance battery: {unexpected} unexpected outcome(s)");
        ExitCode::FAILURE
    }
}
