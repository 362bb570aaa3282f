//! Closed-form convergence bounds the solvers are checked against.
//!
//! `d0` is the initial distance to the solution (`‖x_0 − x*‖` or
//! `‖z_0 − z*‖`). Outer residuals are `‖x − J_{η(F+G)}(x)‖/η` unless stated
//! otherwise.

/// Inexact Halpern: `res_k² ≤ 16 d0²/((η−ρ)²(k+1)²)`, `k ≥ 1`.
pub fn halpern_sq(d0: f64, eta: f64, rho: f64, k: usize) -> f64 {
    let g = eta - rho;
    16.0 * d0 * d0 / (g * g * ((k + 1) as f64).powi(2))
}

/// Inexact KM: `(1/K) Σ_{k<K} res_k² ≤ 11 d0²/((η−ρ)² K)`.
pub fn km_average_sq(d0: f64, eta: f64, rho: f64, k_total: usize) -> f64 {
    let g = eta - rho;
    11.0 * d0 * d0 / (g * g * k_total as f64)
}

/// Stochastic Halpern: `E res_k² ≤ 36(d0² + σ²)/((η−ρ)² k²)`, `k ≥ 1`.
pub fn stochastic_halpern_sq(d0: f64, sigma2: f64, eta: f64, rho: f64, k: usize) -> f64 {
    let g = eta - rho;
    36.0 * (d0 * d0 + sigma2) / (g * g * (k as f64).powi(2))
}

/// MLMC KM, uniformly random iterate among the first `K`:
/// `E‖x − J(x)‖² ≤ 64(d0² + α²σ²)·ln(K+3)/(α²√K)` (not divided by `η²`).
pub fn mlmc_km_sq(d0: f64, sigma2: f64, alpha: f64, k_total: usize) -> f64 {
    let k = k_total as f64;
    64.0 * (d0 * d0 + alpha * alpha * sigma2) * (k + 3.0).ln() / (alpha * alpha * k.sqrt())
}

/// Per-step contraction factor of deterministic FBF on squared distances,
/// `1 − μ/(2L_B)`, valid when `μ/L_B ≤ 3/4` (a smaller declared `μ` always
/// qualifies).
pub fn fbf_contraction(mu: f64, l_b: f64) -> f64 {
    1.0 - mu / (2.0 * l_b)
}

/// FBF iterations guaranteeing `‖z_N − z*‖ ≤ ζ`:
/// `⌈(4L_B/μ)·ln(d0/ζ)⌉` (zero when `d0 ≤ ζ`).
pub fn fbf_iterations(d0: f64, zeta: f64, mu: f64, l_b: f64) -> u64 {
    if d0 <= zeta {
        0
    } else {
        ((4.0 * l_b / mu) * (d0 / zeta).ln()).ceil() as u64
    }
}

/// Stochastic FBF last iterate:
/// `E‖z_N − z*‖² ≤ (6(L_B/μ)d0² + 48σ²/μ²)/(N + 6L_B/μ)`, with `σ²` the
/// variance of the sampled inner map.
pub fn stochastic_fbf_sq(d0: f64, sigma2: f64, mu: f64, l_b: f64, n: u64) -> f64 {
    let kappa = l_b / mu;
    (6.0 * kappa * d0 * d0 + 48.0 * sigma2 / (mu * mu)) / (n as f64 + 6.0 * kappa)
}

/// MLMC bias: `‖E y − z*‖² ≤ (12(L_B/μ)d0² + 96σ²/μ²)/N`.
pub fn mlmc_bias_sq(d0: f64, sigma2: f64, mu: f64, l_b: f64, n: u64) -> f64 {
    let kappa = l_b / mu;
    (12.0 * kappa * d0 * d0 + 96.0 * sigma2 / (mu * mu)) / n as f64
}

/// MLMC second moment: `E‖y − z*‖² ≤ 14(6(L_B/μ)d0² + 48σ²/μ²)·log₂N`.
pub fn mlmc_second_moment(d0: f64, sigma2: f64, mu: f64, l_b: f64, n: u64) -> f64 {
    let kappa = l_b / mu;
    14.0 * (6.0 * kappa * d0 * d0 + 48.0 * sigma2 / (mu * mu)) * (n as f64).log2()
}

/// Ceiling on the expected oracle calls of one MLMC draw, `12(log₂N + 1)`.
pub fn mlmc_cost(n: u64) -> f64 {
    12.0 * ((n as f64).log2() + 1.0)
}

/// Inner accuracy the Halpern budget is sized for:
/// `‖R(x_k)‖/(98·√(k+2)·ln(k+2))` with `R = Id − J`.
pub fn halpern_inner_tolerance(r_norm: f64, k: usize) -> f64 {
    let k2 = (k + 2) as f64;
    r_norm / (98.0 * k2.sqrt() * k2.ln())
}
