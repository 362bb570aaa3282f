//! `verify` subcommand: operator-property suite for a problem spec.

use std::path::Path;

use serde::Serialize;

use super::config::ProblemConfig;
use super::{EXIT_CHECK_FAILED, EXIT_CONFIG, EXIT_NUMERIC, EXIT_OK};
use crate::error::Error;
use crate::model::InclusionProblem;
use crate::verify::{property_suite, PropertyReport};

#[derive(Serialize)]
struct VerifyOutput<'a> {
    problem: &'a ProblemConfig,
    label: &'a str,
    eta: f64,
    rho: f64,
    samples: usize,
    seed: u64,
    passed: bool,
    reports: Vec<PropertyReport>,
}

/// Step used when none is given: midway between `ρ` and `1/L`.
pub fn default_eta(p: &InclusionProblem, rho: f64) -> f64 {
    let l = p.lipschitz();
    if l == 0.0 {
        1.0
    } else if rho > 0.0 {
        0.5 * (rho + 1.0 / l)
    } else {
        0.5 / l
    }
}

pub fn cmd_verify(problem_path: &Path, samples: usize, seed: u64, eta: Option<f64>, out: Option<&Path>) -> i32 {
    let config: ProblemConfig = match std::fs::read_to_string(problem_path)
        .map_err(|e| format!("cannot read {}: {e}", problem_path.display()))
        .and_then(|t| serde_json::from_str(&t).map_err(|e| format!("line {}, column {}: {e}", e.line(), e.column())))
    {
        Ok(c) => c,
        Err(e) => {
            eprintln!("config error: {e}");
            return EXIT_CONFIG;
        }
    };
    let problem = match config.build() {
        Ok(p) => p,
        Err(e) => {
            eprintln!("config error: field `problem`: {e}");
            return EXIT_CONFIG;
        }
    };
    let rho = config.rho_for(&problem);
    let eta = eta.unwrap_or_else(|| default_eta(&problem, rho));
    let reports = match property_suite(&problem, eta, rho, samples, seed) {
        Ok(r) => r,
        Err(e @ (Error::NonFinite { .. } | Error::SingularSystem { .. })) => {
            eprintln!("numeric error: {e}");
            return EXIT_NUMERIC;
        }
        Err(e) => {
            eprintln!("config error: {e}");
            return EXIT_CONFIG;
        }
    };
    for r in &reports {
        eprintln!(
            "{} {:<42} worst violation {:+.3e} (tolerance {:.0e}, {} samples)",
            if r.passed { "PASS" } else { "FAIL" },
            r.name,
            r.worst_violation,
            r.tolerance,
            r.samples
        );
    }
    let passed = reports.iter().all(|r| r.passed);
    let output = VerifyOutput {
        problem: &config,
        label: &problem.label,
        eta,
        rho,
        samples,
        seed,
        passed,
        reports,
    };
    let text = serde_json::to_string_pretty(&output).expect("report serializes") + "\n";
    match out {
        Some(path) => {
            if let Err(e) = std::fs::write(path, text) {
                eprintln!("config error: cannot write {}: {e}", path.display());
                return EXIT_CONFIG;
            }
        }
        None => print!("{text}"),
    }
    if passed {
        EXIT_OK
    } else {
        EXIT_CHECK_FAILED
    }
}
