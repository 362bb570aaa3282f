//! Outer fixed-point loops and their inner-budget schedules.

use std::fmt;
use std::str::FromStr;

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::{make_shifted_map, InclusionProblem, OracleCounter, ScaledProx, SolveReport, TraceRow};
use crate::point::Point;
use crate::rng::{substream, Lane, MAX_OUTER};
use crate::subsolver::{fbf_run, fbf_stochastic_run, mlmc_average, InnerSolveResult, LevelSampling};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Algorithm {
    Halpern,
    Km,
    HalpernStoch,
    KmMlmc,
}

impl Algorithm {
    pub const ALL: [Algorithm; 4] = [
        Algorithm::Halpern,
        Algorithm::Km,
        Algorithm::HalpernStoch,
        Algorithm::KmMlmc,
    ];

    pub fn name(&self) -> &'static str {
        match self {
            Algorithm::Halpern => "halpern",
            Algorithm::Km => "km",
            Algorithm::HalpernStoch => "halpern_stoch",
            Algorithm::KmMlmc => "km_mlmc",
        }
    }

    pub fn is_stochastic(&self) -> bool {
        matches!(self, Algorithm::HalpernStoch | Algorithm::KmMlmc)
    }
}

impl fmt::Display for Algorithm {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Algorithm {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Algorithm::ALL
            .into_iter()
            .find(|a| a.name() == s)
            .ok_or_else(|| Error::invalid("algorithm", format!("unknown algorithm `{s}`")))
    }
}

/// Parameters shared by all outer loops.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct OuterParams {
    pub eta: f64,
    pub rho: f64,
    pub k_max: usize,
    pub seed: u64,
    /// Multiplier on every inner budget; `1` reproduces the analysed schedule.
    pub budget_scale: f64,
}

impl OuterParams {
    pub fn new(eta: f64, rho: f64, k_max: usize) -> Self {
        OuterParams {
            eta,
            rho,
            k_max,
            seed: 0,
            budget_scale: 1.0,
        }
    }

    pub fn with_seed(mut self, seed: u64) -> Self {
        self.seed = seed;
        self
    }

    pub fn with_budget_scale(mut self, scale: f64) -> Self {
        self.budget_scale = scale;
        self
    }

    /// `α = 1 − ρ/η`.
    pub fn alpha(&self) -> f64 {
        1.0 - self.rho / self.eta
    }

    /// Checks `0 ≤ ρ < η < 1/L`, `K ≥ 1` and `budget_scale ∈ (0, 1]`.
    pub fn validate(&self, lipschitz: f64) -> Result<()> {
        if !(self.eta > 0.0 && self.eta.is_finite()) {
            return Err(Error::invalid("eta", format!("{} must be positive", self.eta)));
        }
        if self.eta * lipschitz >= 1.0 {
            return Err(Error::StepTooLarge {
                eta: self.eta,
                lipschitz,
            });
        }
        if !(self.rho >= 0.0 && self.rho.is_finite()) {
            return Err(Error::invalid(
                "rho",
                format!("{} must be finite and nonnegative", self.rho),
            ));
        }
        if self.rho >= self.eta {
            return Err(Error::invalid(
                "rho",
                format!("rho < eta violated ({} >= {})", self.rho, self.eta),
            ));
        }
        if self.k_max == 0 || self.k_max as u64 >= MAX_OUTER {
            return Err(Error::invalid("k_max", format!("{} must lie in [1, 2^24)", self.k_max)));
        }
        if !(self.budget_scale > 0.0 && self.budget_scale <= 1.0) {
            return Err(Error::invalid(
                "budget_scale",
                format!("{} must lie in (0, 1]", self.budget_scale),
            ));
        }
        Ok(())
    }
}

fn check_eta_l(eta_l: f64) -> Result<()> {
    if !(0.0..1.0).contains(&eta_l) {
        return Err(Error::invalid("eta*L", format!("{eta_l} must lie in [0, 1)")));
    }
    Ok(())
}

fn ceil_budget(v: f64) -> u64 {
    v.ceil().max(1.0) as u64
}

/// `N_k = ⌈(4(1+ηL)/(1−ηL))·ln(98·√(k+2)·ln(k+2))⌉`.
pub fn budget_halpern(k: u64, eta_l: f64) -> Result<u64> {
    check_eta_l(eta_l)?;
    let k2 = (k + 2) as f64;
    let c = 4.0 * (1.0 + eta_l) / (1.0 - eta_l);
    Ok(ceil_budget(c * (98.0 * k2.sqrt() * k2.ln()).ln()))
}

/// `N_k = ⌈(4(1+ηL)/(1−ηL))·ln(8(k+1)·ln²(k+2))⌉`.
pub fn budget_km(k: u64, eta_l: f64) -> Result<u64> {
    check_eta_l(eta_l)?;
    let l = ((k + 2) as f64).ln();
    let c = 4.0 * (1.0 + eta_l) / (1.0 - eta_l);
    Ok(ceil_budget(c * (8.0 * (k + 1) as f64 * l * l).ln()))
}

/// `N_k = ⌈1734(k+2)³·ln²(k+2)/(1−ηL)²⌉`.
pub fn budget_halpern_stochastic(k: u64, eta_l: f64) -> Result<u64> {
    check_eta_l(eta_l)?;
    let k2 = (k + 2) as f64;
    let l = k2.ln();
    let g = 1.0 - eta_l;
    Ok(ceil_budget(1734.0 * k2.powi(3) * l * l / (g * g)))
}

/// Schedule of the MLMC Krasnosel'skii–Mann loop at one outer step.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct MlmcBudget {
    /// `α_k/α = 1/(√(k+2)·ln(k+3))`.
    pub alpha_ratio: f64,
    /// Inner horizon `N_k`.
    pub inner: u64,
    /// Estimator draws `M_k`.
    pub draws: u64,
}

/// `α_k/α`, `N_k = ⌈96(1−ηL)⁻²/min{α_k/(120α(k+1)), 1/120}⌉` and
/// `M_k = ⌈672·120·log₂(N_k)/(1−ηL)²⌉`.
pub fn budgets_mlmc_km(k: u64, eta_l: f64) -> Result<MlmcBudget> {
    check_eta_l(eta_l)?;
    let alpha_ratio = 1.0 / (((k + 2) as f64).sqrt() * ((k + 3) as f64).ln());
    let g2 = (1.0 - eta_l) * (1.0 - eta_l);
    let m = (alpha_ratio / (120.0 * (k + 1) as f64)).min(1.0 / 120.0);
    let inner = ceil_budget(96.0 / g2 / m);
    let draws = ceil_budget(672.0 * 120.0 * (inner as f64).log2() / g2);
    Ok(MlmcBudget {
        alpha_ratio,
        inner,
        draws,
    })
}

/// `max(1, ⌈scale·n⌉)`; exact when `scale = 1`.
pub fn scaled_budget(n: u64, scale: f64) -> u64 {
    if scale == 1.0 {
        n
    } else {
        ceil_budget(scale * n as f64)
    }
}

/// Options for [`km_mlmc_solve_with`].
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct MlmcOptions {
    pub sampling: LevelSampling,
    /// Overrides `M_k` for every `k`.
    pub draws_override: Option<u64>,
}

impl Default for MlmcOptions {
    fn default() -> Self {
        MlmcOptions {
            sampling: LevelSampling::Geometric,
            draws_override: None,
        }
    }
}

struct Prepared<'p> {
    problem: &'p InclusionProblem,
    params: OuterParams,
    eta_l: f64,
    alpha: f64,
}

fn prepare<'p>(
    p: &'p InclusionProblem,
    params: &OuterParams,
    x0: &Point,
    algorithm: Algorithm,
) -> Result<Prepared<'p>> {
    params.validate(p.lipschitz())?;
    x0.check_dim(p.dim())?;
    x0.ensure_finite("initial point")?;
    let admissible = match algorithm {
        Algorithm::Halpern | Algorithm::HalpernStoch => p.assumption.implies_cohypomonotone(),
        Algorithm::Km | Algorithm::KmMlmc => p.assumption.is_classified(),
    };
    if !admissible {
        return Err(Error::invalid(
            "assumption",
            format!("{algorithm} does not apply to a problem tagged {:?}", p.assumption),
        ));
    }
    if algorithm.is_stochastic() && !p.f.has_sampler() {
        return Err(Error::MissingSampler);
    }
    Ok(Prepared {
        problem: p,
        params: *params,
        eta_l: params.eta * p.lipschitz(),
        alpha: params.alpha(),
    })
}

/// Shared driver: `step(k, x_k)` returns the inner result and the next iterate.
fn drive<F>(prep: &Prepared, algorithm: Algorithm, x0: &Point, mut step: F) -> Result<SolveReport>
where
    F: FnMut(u64, &Point) -> Result<(InnerSolveResult, Point)>,
{
    let p = prep.problem;
    let eta = prep.params.eta;
    let mut counter = OracleCounter::new();
    let mut rows = Vec::with_capacity(prep.params.k_max);
    let mut x = x0.clone();
    let start = std::time::Instant::now();
    for k in 0..prep.params.k_max {
        let (inner, next) = step(k as u64, &x)?;
        next.ensure_finite("outer iterate")?;
        counter.charge(inner.oracle_calls);
        rows.push(TraceRow {
            k,
            inner_iters: inner.iterations,
            cum_oracle_calls: counter.calls(),
            residual_estimate: Some(x.dist(&inner.z_out) / eta),
            dist_to_solution: p.known_solution.as_ref().map(|s| x.dist(s)),
            iterate: x,
            resolvent_estimate: inner.z_out,
            elapsed_ns: start.elapsed().as_nanos().min(u64::MAX as u128) as u64,
        });
        x = next;
    }
    let uniform_index = if algorithm.is_stochastic() {
        let mut rng = substream(prep.params.seed, prep.params.k_max as u64, 0, Lane::Select)?;
        Some(rng.random_range(0..prep.params.k_max))
    } else {
        None
    };
    Ok(SolveReport {
        algorithm,
        params: prep.params,
        problem: p.label.clone(),
        x0: x0.clone(),
        rows,
        final_iterate: x,
        uniform_index,
    })
}

fn prox(p: &InclusionProblem, eta: f64) -> ScaledProx<'_> {
    ScaledProx {
        inner: &*p.g,
        scale: eta,
    }
}

/// `x_{k+1} = β_k x_0 + (1−β_k)((1−α)x_k + α J̃(x_k))`, `β_k = 1/(k+2)`.
fn halpern_update(x0: &Point, x: &Point, j: &Point, alpha: f64, k: u64) -> Point {
    let beta = 1.0 / (k + 2) as f64;
    let mut inner = Point::lincomb(1.0 - alpha, x, alpha, j);
    inner = Point::lincomb(beta, x0, 1.0 - beta, &inner);
    inner
}

/// Inexact Halpern iteration with deterministic FBF inner solves.
pub fn halpern_solve(p: &InclusionProblem, params: &OuterParams, x0: &Point) -> Result<SolveReport> {
    let prep = prepare(p, params, x0, Algorithm::Halpern)?;
    let f = &**p.deterministic_map();
    drive(&prep, Algorithm::Halpern, x0, |k, x| {
        let n = scaled_budget(budget_halpern(k, prep.eta_l)?, params.budget_scale);
        let b = make_shifted_map(f, params.eta, x)?;
        let r = fbf_run(x, n, prox(p, params.eta), &b)?;
        let next = halpern_update(x0, x, &r.z_out, prep.alpha, k);
        Ok((r, next))
    })
}

/// Inexact Krasnosel'skii–Mann iteration `x_{k+1} = (1−α)x_k + α J̃(x_k)`.
pub fn km_solve(p: &InclusionProblem, params: &OuterParams, x0: &Point) -> Result<SolveReport> {
    let prep = prepare(p, params, x0, Algorithm::Km)?;
    let f = &**p.deterministic_map();
    drive(&prep, Algorithm::Km, x0, |k, x| {
        let n = scaled_budget(budget_km(k, prep.eta_l)?, params.budget_scale);
        let b = make_shifted_map(f, params.eta, x)?;
        let r = fbf_run(x, n, prox(p, params.eta), &b)?;
        let next = Point::lincomb(1.0 - prep.alpha, x, prep.alpha, &r.z_out);
        Ok((r, next))
    })
}

/// Halpern iteration with stochastic FBF inner solves. Outer step `k`
/// draws its oracle noise from substream `(seed, k, 0, Noise)`.
pub fn halpern_stochastic_solve(p: &InclusionProblem, params: &OuterParams, x0: &Point) -> Result<SolveReport> {
    let prep = prepare(p, params, x0, Algorithm::HalpernStoch)?;
    drive(&prep, Algorithm::HalpernStoch, x0, |k, x| {
        let n = scaled_budget(budget_halpern_stochastic(k, prep.eta_l)?, params.budget_scale);
        let b = make_shifted_map(&*p.f, params.eta, x)?;
        let mut rng = substream(params.seed, k, 0, Lane::Noise)?;
        let r = fbf_stochastic_run(x, n, prox(p, params.eta), &b, &mut rng)?;
        let next = halpern_update(x0, x, &r.z_out, prep.alpha, k);
        Ok((r, next))
    })
}

/// Krasnosel'skii–Mann iteration with decaying relaxation `α_k` and an
/// averaged MLMC resolvent estimate.
pub fn km_mlmc_solve(p: &InclusionProblem, params: &OuterParams, x0: &Point) -> Result<SolveReport> {
    km_mlmc_solve_with(p, params, x0, MlmcOptions::default())
}

pub fn km_mlmc_solve_with(
    p: &InclusionProblem,
    params: &OuterParams,
    x0: &Point,
    opts: MlmcOptions,
) -> Result<SolveReport> {
    let prep = prepare(p, params, x0, Algorithm::KmMlmc)?;
    drive(&prep, Algorithm::KmMlmc, x0, |k, x| {
        let budget = budgets_mlmc_km(k, prep.eta_l)?;
        let n = scaled_budget(budget.inner, params.budget_scale).max(2);
        let m = opts
            .draws_override
            .unwrap_or_else(|| scaled_budget(budget.draws, params.budget_scale));
        let b = make_shifted_map(&*p.f, params.eta, x)?;
        let r = mlmc_average(x, n, m, prox(p, params.eta), &b, params.seed, k, opts.sampling)?;
        let alpha_k = prep.alpha * budget.alpha_ratio;
        let next = Point::lincomb(1.0 - alpha_k, x, alpha_k, &r.z_out);
        Ok((r, next))
    })
}

/// Dispatches on `algorithm`.
pub fn solve(algorithm: Algorithm, p: &InclusionProblem, params: &OuterParams, x0: &Point) -> Result<SolveReport> {
    match algorithm {
        Algorithm::Halpern => halpern_solve(p, params, x0),
        Algorithm::Km => km_solve(p, params, x0),
        Algorithm::HalpernStoch => halpern_stochastic_solve(p, params, x0),
        Algorithm::KmMlmc => km_mlmc_solve(p, params, x0),
    }
}

/// Inner budget `N_k` (and `M_k`, `α_k/α` for MLMC) of `algorithm`.
pub fn budget_row(algorithm: Algorithm, k: u64, eta_l: f64) -> Result<(u64, Option<MlmcBudget>)> {
    Ok(match algorithm {
        Algorithm::Halpern => (budget_halpern(k, eta_l)?, None),
        Algorithm::Km => (budget_km(k, eta_l)?, None),
        Algorithm::HalpernStoch => (budget_halpern_stochastic(k, eta_l)?, None),
        Algorithm::KmMlmc => {
            let b = budgets_mlmc_km(k, eta_l)?;
            (b.inner, Some(b))
        }
    })
}
