//! `run` subcommand: solve a configured problem for one or more seeds,
//! write per-seed CSV traces and an aggregate summary.

use std::fs::File;
use std::io::BufWriter;
use std::path::{Path, PathBuf};

use rayon::prelude::*;
use serde::Serialize;

use super::config::{ConfigError, RunConfig, ValidatedRun};
use super::trace::{write_csv, CsvRow};
use super::{EXIT_CONFIG, EXIT_NUMERIC, EXIT_OK};
use crate::bounds;
use crate::error::Result;
use crate::model::{Assumption, SolveReport};
use crate::outer::{solve, Algorithm};
use crate::verify::residual;

/// Outcome of a theorem check in the summary.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum CheckStatus {
    Pass,
    Fail,
    NotApplicable,
}

#[derive(Clone, Debug, Serialize)]
pub struct TheoremCheck {
    pub name: String,
    pub status: CheckStatus,
    pub detail: String,
}

/// Reference residuals of one seed's run.
#[derive(Clone, Debug)]
pub struct SeedRun {
    pub seed: u64,
    pub report: SolveReport,
    /// `res(x_k)` for `k = 0, …, K`.
    pub residuals: Vec<f64>,
}

#[derive(Clone, Debug, Serialize)]
struct ProblemSummary {
    label: String,
    dim: usize,
    lipschitz: f64,
    assumption: Assumption,
    known_solution: Option<Vec<f64>>,
}

#[derive(Clone, Debug, Serialize)]
struct SeedSummary {
    seed: u64,
    csv: PathBuf,
    total_oracle_calls: u64,
    final_residual: f64,
    uniform_index: Option<usize>,
}

#[derive(Clone, Debug, Serialize)]
struct Summary<'a> {
    config: &'a RunConfig,
    problem: ProblemSummary,
    seeds: Vec<SeedSummary>,
    /// Mean over seeds of `res(x_k)`, `k = 0, …, K`.
    mean_residual: Vec<f64>,
    /// Mean over seeds of `res(x_k)²`, `k = 0, …, K`.
    mean_squared_residual: Vec<f64>,
    theorem_checks: Vec<TheoremCheck>,
}

/// Constants shared by the theorem bounds of a run, present only when the
/// analysed guarantee applies.
#[derive(Clone, Copy, Debug)]
pub struct BoundContext {
    pub algorithm: Algorithm,
    pub d0: f64,
    pub sigma2: f64,
    pub eta: f64,
    pub rho: f64,
    pub k_total: usize,
}

impl BoundContext {
    /// `None` with the reason when the guarantee does not apply.
    pub fn for_run(run: &ValidatedRun) -> std::result::Result<Self, String> {
        let c = &run.config;
        let p = &run.problem;
        if c.budget_scale != 1.0 {
            return Err(format!("budget_scale = {} (theorem checks need 1)", c.budget_scale));
        }
        let Some(sol) = &p.known_solution else {
            return Err("problem has no known solution".into());
        };
        if c.rho < p.assumption.rho() {
            return Err(format!(
                "rho = {} understates the problem constant {}",
                c.rho,
                p.assumption.rho()
            ));
        }
        Ok(BoundContext {
            algorithm: c.algorithm,
            d0: run.x0.dist(sol),
            sigma2: p.f.variance_bound().unwrap_or(0.0),
            eta: c.eta,
            rho: c.rho,
            k_total: c.k_max,
        })
    }

    /// Bound on the residual shown next to row `k`.
    pub fn row_bound(&self, k: usize) -> Option<f64> {
        let (d0, eta, rho) = (self.d0, self.eta, self.rho);
        match self.algorithm {
            Algorithm::Halpern if k >= 1 => Some(bounds::halpern_sq(d0, eta, rho, k).sqrt()),
            Algorithm::Km => Some(bounds::km_average_sq(d0, eta, rho, k + 1).sqrt()),
            Algorithm::HalpernStoch if k >= 1 => {
                Some(bounds::stochastic_halpern_sq(d0, self.sigma2, eta, rho, k).sqrt())
            }
            Algorithm::KmMlmc => {
                let alpha = 1.0 - rho / eta;
                Some(bounds::mlmc_km_sq(d0, self.sigma2, alpha, k + 1).sqrt() / eta)
            }
            _ => None,
        }
    }
}

/// Solves for one seed and evaluates reference residuals at every iterate.
pub fn run_seed(run: &ValidatedRun, seed: u64) -> Result<SeedRun> {
    let c = &run.config;
    let report = solve(c.algorithm, &run.problem, &c.params(seed), &run.x0)?;
    let residuals = report
        .iterates()
        .map(|x| residual(&run.problem, x, c.eta, c.residual_tol))
        .collect::<Result<Vec<_>>>()?;
    Ok(SeedRun {
        seed,
        report,
        residuals,
    })
}

fn mean_over_seeds(runs: &[SeedRun], f: impl Fn(f64) -> f64) -> Vec<f64> {
    let len = runs[0].residuals.len();
    (0..len)
        .map(|k| runs.iter().map(|r| f(r.residuals[k])).sum::<f64>() / runs.len() as f64)
        .collect()
}

/// Evaluates the algorithm's guarantee on the runs.
pub fn theorem_checks(ctx: std::result::Result<BoundContext, String>, runs: &[SeedRun], tol: f64) -> Vec<TheoremCheck> {
    let ctx = match ctx {
        Ok(c) => c,
        Err(reason) => {
            return vec![TheoremCheck {
                name: "theorem_bound".into(),
                status: CheckStatus::NotApplicable,
                detail: reason,
            }]
        }
    };
    let slack = 2.0 * tol / ctx.eta;
    let k_total = ctx.k_total;
    let mean_sq = mean_over_seeds(runs, |r| r * r);
    let status = |ok: bool| if ok { CheckStatus::Pass } else { CheckStatus::Fail };
    match ctx.algorithm {
        Algorithm::Halpern => {
            let mut worst = (0usize, 0u64, f64::NEG_INFINITY);
            for run in runs {
                for k in 1..=k_total {
                    let b = bounds::halpern_sq(ctx.d0, ctx.eta, ctx.rho, k).sqrt() + slack;
                    let gap = run.residuals[k] - b;
                    if gap > worst.2 {
                        worst = (k, run.seed, gap);
                    }
                }
            }
            vec![TheoremCheck {
                name: "halpern_last_iterate_rate".into(),
                status: status(worst.2 <= 0.0),
                detail: format!(
                    "max over k in [1, {k_total}] of residual - bound = {:e} (k = {}, seed {})",
                    worst.2, worst.0, worst.1
                ),
            }]
        }
        Algorithm::Km => {
            let mut worst = f64::NEG_INFINITY;
            for run in runs {
                let avg = run.residuals[..k_total].iter().map(|r| r * r).sum::<f64>() / k_total as f64;
                let b = (bounds::km_average_sq(ctx.d0, ctx.eta, ctx.rho, k_total).sqrt() + slack).powi(2);
                worst = worst.max(avg - b);
            }
            vec![TheoremCheck {
                name: "km_average_rate".into(),
                status: status(worst <= 0.0),
                detail: format!("max over seeds of mean squared residual - bound = {worst:e}"),
            }]
        }
        Algorithm::HalpernStoch => {
            let mut worst = (0usize, f64::NEG_INFINITY);
            for (k, m) in mean_sq.iter().enumerate().skip(1) {
                let b = (bounds::stochastic_halpern_sq(ctx.d0, ctx.sigma2, ctx.eta, ctx.rho, k).sqrt() + slack).powi(2);
                if m - b > worst.1 {
                    worst = (k, m - b);
                }
            }
            vec![TheoremCheck {
                name: "stochastic_halpern_expected_rate".into(),
                status: status(worst.1 <= 0.0),
                detail: format!(
                    "max over k of seed-mean squared residual - bound = {:e} (k = {}, {} seeds)",
                    worst.1,
                    worst.0,
                    runs.len()
                ),
            }]
        }
        Algorithm::KmMlmc => {
            let alpha = 1.0 - ctx.rho / ctx.eta;
            let avg = mean_sq[..k_total].iter().sum::<f64>() / k_total as f64 * ctx.eta * ctx.eta;
            let b = bounds::mlmc_km_sq(ctx.d0, ctx.sigma2, alpha, k_total);
            vec![TheoremCheck {
                name: "mlmc_km_random_iterate_rate".into(),
                status: status(avg <= b + 2.0 * tol * ctx.eta),
                detail: format!("E||x - J(x)||^2 estimate {avg:e} vs bound {b:e} ({} seeds)", runs.len()),
            }]
        }
    }
}

fn csv_path(prefix: &Path, seed: u64, multi: bool) -> PathBuf {
    let mut s = prefix.as_os_str().to_owned();
    if multi {
        s.push(format!(".seed{seed}.csv"));
    } else {
        s.push(".csv");
    }
    PathBuf::from(s)
}

fn summary_path(prefix: &Path) -> PathBuf {
    let mut s = prefix.as_os_str().to_owned();
    s.push(".summary.json");
    PathBuf::from(s)
}

fn csv_rows(run: &SeedRun, ctx: Option<&BoundContext>, timing: bool) -> Vec<CsvRow> {
    run.report
        .rows
        .iter()
        .map(|row| CsvRow {
            k: row.k,
            inner_iters: row.inner_iters,
            cum_oracle_calls: row.cum_oracle_calls,
            residual: Some(run.residuals[row.k]),
            residual_bound_theorem: ctx.and_then(|c| c.row_bound(row.k)),
            dist_to_solution: row.dist_to_solution,
            wall_ns: timing.then_some(row.elapsed_ns),
        })
        .collect()
}

fn output_error(path: &Path, e: std::io::Error) -> ConfigError {
    ConfigError::field("output", format!("cannot write {}: {e}", path.display()))
}

fn write_outputs(run: &ValidatedRun, runs: &[SeedRun]) -> std::result::Result<PathBuf, ConfigError> {
    let c = &run.config;
    if let Some(dir) = c.output.parent().filter(|d| !d.as_os_str().is_empty()) {
        std::fs::create_dir_all(dir).map_err(|e| output_error(dir, e))?;
    }
    let ctx = BoundContext::for_run(run);
    let multi = runs.len() > 1;
    let mut seeds = Vec::with_capacity(runs.len());
    for r in runs {
        let path = csv_path(&c.output, r.seed, multi);
        let file = File::create(&path).map_err(|e| output_error(&path, e))?;
        write_csv(BufWriter::new(file), &csv_rows(r, ctx.as_ref().ok(), c.timing))
            .map_err(|e| output_error(&path, e))?;
        seeds.push(SeedSummary {
            seed: r.seed,
            csv: path,
            total_oracle_calls: r.report.total_oracle_calls(),
            final_residual: *r.residuals.last().expect("K + 1 residuals"),
            uniform_index: r.report.uniform_index,
        });
    }
    let p = &run.problem;
    let summary = Summary {
        config: c,
        problem: ProblemSummary {
            label: p.label.clone(),
            dim: p.dim(),
            lipschitz: p.lipschitz(),
            assumption: p.assumption,
            known_solution: p.known_solution.clone().map(|s| s.into_vec()),
        },
        seeds,
        mean_residual: mean_over_seeds(runs, |r| r),
        mean_squared_residual: mean_over_seeds(runs, |r| r * r),
        theorem_checks: theorem_checks(ctx, runs, c.residual_tol),
    };
    let path = summary_path(&c.output);
    let text = serde_json::to_string_pretty(&summary).expect("summary serializes");
    std::fs::write(&path, text + "\n").map_err(|e| output_error(&path, e))?;
    Ok(path)
}

/// Runs the configuration at `path`; returns the process exit code.
pub fn cmd_run(path: &Path) -> i32 {
    let run = match RunConfig::from_path(path).and_then(RunConfig::validate) {
        Ok(r) => r,
        Err(e) => {
            eprintln!("config error: {e}");
            return EXIT_CONFIG;
        }
    };
    let results: Vec<Result<SeedRun>> = run.seeds.par_iter().map(|&s| run_seed(&run, s)).collect();
    let mut runs = Vec::with_capacity(results.len());
    for (seed, r) in run.seeds.iter().zip(results) {
        match r {
            Ok(r) => runs.push(r),
            Err(e) => {
                eprintln!("numeric error (seed {seed}): {e}");
                return EXIT_NUMERIC;
            }
        }
    }
    match write_outputs(&run, &runs) {
        Ok(summary) => {
            eprintln!("wrote {}", summary.display());
            EXIT_OK
        }
        Err(e) => {
            eprintln!("config error: {e}");
            EXIT_CONFIG
        }
    }
}
