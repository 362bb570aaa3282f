//! Reference resolvents, residuals, optimality certificates and sampled
//! checks of the operator properties the convergence analysis relies on.

use rand::Rng;
use rand_distr::StandardNormal;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::model::{make_shifted_map, Assumption, Domain, InclusionProblem, ProxOperator, ScaledProx, SolveReport};
use crate::point::{dot, norm, Point};
use crate::problems::sample_simplex_product;
use crate::prox::resolve_affine;
use crate::rng::{substream, Lane, StreamRng};

/// Default absolute accuracy of reference resolvents.
pub const DEFAULT_TOL: f64 = 1e-12;

/// Tolerance on relative violations of the conic and cocoercive checks.
pub const CONIC_TOL: f64 = 1e-8;

/// Tolerance on relative violations of the monotonicity and Lipschitz checks.
pub const STRUCTURE_TOL: f64 = 1e-10;

/// Hard cap on certified FBF iterations per reference resolvent.
const MAX_REFERENCE_ITERS: u64 = 50_000_000;

/// `J_{η(F+G)}(x)` together with a bound on its distance to the exact value.
#[derive(Clone, Debug)]
pub struct ReferenceResolvent {
    pub point: Point,
    pub error_bound: f64,
}

fn check_eta(p: &InclusionProblem, eta: f64) -> Result<()> {
    if !(eta > 0.0 && eta.is_finite()) {
        return Err(Error::invalid("eta", format!("{eta} must be positive")));
    }
    if eta * p.lipschitz() >= 1.0 {
        return Err(Error::StepTooLarge {
            eta,
            lipschitz: p.lipschitz(),
        });
    }
    Ok(())
}

/// Computes `J_{η(F+G)}(x)` to absolute accuracy `tol`.
///
/// Affine `F` with `G = 0` is solved directly. Otherwise deterministic FBF
/// runs on `B(z) = z + ηF(z) − x` with an a-posteriori certificate: for
/// `w = J_{τA}(z − τBz)` the vector `u = (z − w)/τ − Bz + Bw` lies in
/// `(A + B)(w)`, so `‖w − J(x)‖ ≤ ‖u‖/μ`. The returned point is `w` and the
/// bound is `‖u‖/μ`.
pub fn reference_resolvent(p: &InclusionProblem, x: &Point, eta: f64, tol: f64) -> Result<ReferenceResolvent> {
    check_eta(p, eta)?;
    x.check_dim(p.dim())?;
    x.ensure_finite("reference resolvent input")?;
    if tol.is_nan() || tol <= 0.0 {
        return Err(Error::invalid("tol", "must be positive"));
    }
    let f = p.deterministic_map();
    if p.is_unconstrained() {
        if let Some((m, b)) = f.affine_parts() {
            let z = resolve_affine(m, b, eta, x)?;
            return Ok(ReferenceResolvent {
                point: z,
                error_bound: 0.0,
            });
        }
    }
    let b = make_shifted_map(&**f, eta, x)?;
    let a = ScaledProx {
        inner: &*p.g,
        scale: eta,
    };
    let d = p.dim();
    let tau = 0.5 / b.lipschitz();
    let mu = b.mu();
    let mut z = x.as_slice().to_vec();
    let (mut bz, mut tmp, mut w, mut bw) = (vec![0.0; d], vec![0.0; d], vec![0.0; d], vec![0.0; d]);
    // One FBF step from z; leaves z_{t+1} in z and returns the certificate radius at w.
    let mut step = |z: &mut Vec<f64>, w: &mut Vec<f64>| -> f64 {
        b.eval_into(z, &mut bz);
        for i in 0..d {
            tmp[i] = z[i] - tau * bz[i];
        }
        a.resolve_into(tau, &tmp, w);
        b.eval_into(w, &mut bw);
        let mut u2 = 0.0;
        for i in 0..d {
            let u = (z[i] - w[i]) / tau - bz[i] + bw[i];
            u2 += u * u;
            z[i] = w[i] + tau * (bz[i] - bw[i]);
        }
        u2.sqrt() / mu
    };
    let mut radius = step(&mut z, &mut w);
    let d0 = norm(&x.as_slice().iter().zip(&w).map(|(a, b)| a - b).collect::<Vec<_>>()) + radius;
    let planned = if d0 > tol {
        ((4.0 * b.lipschitz() / mu) * (d0 / tol).ln()).ceil() as u64
    } else {
        0
    };
    let mut done = 1u64;
    while done < planned.max(1) {
        radius = step(&mut z, &mut w);
        done += 1;
    }
    while radius > tol && done < MAX_REFERENCE_ITERS {
        radius = step(&mut z, &mut w);
        done += 1;
    }
    if !radius.is_finite() || radius > tol.max(1e3 * f64::EPSILON * (1.0 + norm(&w)) / mu) {
        return Err(Error::non_finite(format!(
            "reference resolvent did not certify tol {tol:e} (radius {radius:e})"
        )));
    }
    Ok(ReferenceResolvent {
        point: Point::new(w).map_err(|_| Error::non_finite("reference resolvent"))?,
        error_bound: radius,
    })
}

/// Fixed-point residual `‖x − J_{η(F+G)}(x)‖/η`, accurate to `±tol/η`.
pub fn residual(p: &InclusionProblem, x: &Point, eta: f64, tol: f64) -> Result<f64> {
    let j = reference_resolvent(p, x, eta, tol)?;
    Ok(x.dist(&j.point) / eta)
}

/// A point `x̂ ≈ J_{η(F+G)}(x)` with `dist(0, (F+G)(x̂)) ≤ bound`.
#[derive(Clone, Debug, Serialize)]
pub struct Certificate {
    pub point: Point,
    /// `‖x − x̂‖/η + tol/η`.
    pub bound: f64,
    /// `‖F(x̂)‖`, reported when `G = 0`.
    pub operator_norm: Option<f64>,
}

pub fn extract_certificate(p: &InclusionProblem, x: &Point, eta: f64, tol: f64) -> Result<Certificate> {
    let j = reference_resolvent(p, x, eta, tol)?;
    let bound = x.dist(&j.point) / eta + tol / eta;
    let operator_norm = if p.is_unconstrained() {
        Some(p.deterministic_map().eval(&j.point)?.norm())
    } else {
        None
    };
    Ok(Certificate {
        point: j.point,
        bound,
        operator_norm,
    })
}

/// Outcome of a sampled property check.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct PropertyReport {
    pub name: String,
    pub samples: usize,
    /// Largest signed violation; nonpositive values mean the inequality held
    /// with room to spare.
    pub worst_violation: f64,
    pub tolerance: f64,
    pub passed: bool,
}

impl PropertyReport {
    fn new(name: impl Into<String>, samples: usize, worst_violation: f64, tolerance: f64) -> Self {
        PropertyReport {
            name: name.into(),
            samples,
            worst_violation,
            tolerance,
            passed: worst_violation <= tolerance,
        }
    }
}

/// Where sampled test points are drawn from.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct PairSampling {
    /// Radius of the ball (around the known solution, or the origin) used
    /// for unconstrained problems.
    pub radius: f64,
    /// Standard deviation of the Gaussian offset added to half of the
    /// feasible samples of constrained problems.
    pub spread: f64,
}

impl Default for PairSampling {
    fn default() -> Self {
        PairSampling {
            radius: 2.0,
            spread: 0.5,
        }
    }
}

fn ball_sample(rng: &mut StreamRng, center: &[f64], radius: f64) -> Vec<f64> {
    let d = center.len();
    let g: Vec<f64> = (0..d).map(|_| rng.sample::<f64, _>(StandardNormal)).collect();
    let n = norm(&g).max(f64::MIN_POSITIVE);
    let r = radius * rng.random::<f64>().powf(1.0 / d as f64);
    center.iter().zip(&g).map(|(c, v)| c + r * v / n).collect()
}

fn feasible_sample(p: &InclusionProblem, rng: &mut StreamRng, radius: f64) -> Vec<f64> {
    match &p.domain {
        Domain::Unconstrained => {
            let center = p
                .known_solution
                .as_ref()
                .map_or(vec![0.0; p.dim()], |s| s.as_slice().to_vec());
            ball_sample(rng, &center, radius)
        }
        Domain::Simplices { blocks } => sample_simplex_product(rng, blocks),
        Domain::Box { lower, upper } => lower
            .iter()
            .zip(upper)
            .map(|(l, u)| {
                let (l, u) = (l.max(-radius), u.min(radius));
                l + (u - l) * rng.random::<f64>()
            })
            .collect(),
    }
}

/// Test point for operator checks: feasible, and for constrained problems
/// every other sample is pushed off the feasible set.
fn probe_point(p: &InclusionProblem, rng: &mut StreamRng, s: &PairSampling, i: usize) -> Point {
    let mut v = feasible_sample(p, rng, s.radius);
    if !matches!(p.domain, Domain::Unconstrained) && i % 2 == 1 {
        for c in v.iter_mut() {
            *c += s.spread * rng.sample::<f64, _>(StandardNormal);
        }
    }
    Point::from_vec(v)
}

fn conic_lambda(eta: f64, rho: f64) -> Result<f64> {
    if !(rho >= 0.0 && rho < eta) {
        return Err(Error::invalid(
            "rho",
            format!("need 0 <= rho < eta, got rho = {rho}, eta = {eta}"),
        ));
    }
    Ok(1.0 / (2.0 * (1.0 - rho / eta)))
}

fn quasi_target(p: &InclusionProblem) -> Result<Option<Point>> {
    match p.assumption {
        Assumption::WeakMvi { .. } => p
            .known_solution
            .clone()
            .map(Some)
            .ok_or_else(|| Error::invalid("known_solution", "weak-MVI checks need a solution point")),
        _ => Ok(None),
    }
}

/// Sampled pairs `(x, y, J(x), J(y))`; `y` is the solution for weak-MVI
/// problems (quasi variants).
fn resolvent_pairs(
    p: &InclusionProblem,
    eta: f64,
    n: usize,
    rng: &mut StreamRng,
    sampling: &PairSampling,
    mut visit: impl FnMut(&[f64], &[f64], &[f64], &[f64]),
) -> Result<()> {
    let anchor = quasi_target(p)?;
    let anchor_j = match &anchor {
        Some(s) => Some(reference_resolvent(p, s, eta, DEFAULT_TOL)?.point),
        None => None,
    };
    for i in 0..n {
        let x = probe_point(p, rng, sampling, 2 * i);
        let jx = reference_resolvent(p, &x, eta, DEFAULT_TOL)?.point;
        let (y, jy) = match (&anchor, &anchor_j) {
            (Some(s), Some(js)) => (s.clone(), js.clone()),
            _ => {
                let y = probe_point(p, rng, sampling, 2 * i + 1);
                let jy = reference_resolvent(p, &y, eta, DEFAULT_TOL)?.point;
                (y, jy)
            }
        };
        visit(x.as_slice(), y.as_slice(), jx.as_slice(), jy.as_slice());
    }
    Ok(())
}

fn diff(a: &[f64], b: &[f64]) -> Vec<f64> {
    a.iter().zip(b).map(|(x, y)| x - y).collect()
}

/// `J` is conically nonexpansive with `λ = 1/(2α)`, `α = 1 − ρ/η`:
/// `‖(1−1/λ)(x−y) + (1/λ)(J(x)−J(y))‖ ≤ ‖x−y‖`, with `y = x*` for weak-MVI
/// problems. The violation is relative to `‖x−y‖`.
pub fn check_conic_nonexpansive(
    p: &InclusionProblem,
    eta: f64,
    rho: f64,
    n: usize,
    rng: &mut StreamRng,
    sampling: &PairSampling,
) -> Result<PropertyReport> {
    let inv = 1.0 / conic_lambda(eta, rho)?;
    let mut worst = f64::NEG_INFINITY;
    resolvent_pairs(p, eta, n, rng, sampling, |x, y, jx, jy| {
        let dx = diff(x, y);
        let dj = diff(jx, jy);
        let nd = norm(&dx);
        if nd == 0.0 {
            return;
        }
        let t: Vec<f64> = dx.iter().zip(&dj).map(|(a, b)| (1.0 - inv) * a + inv * b).collect();
        worst = worst.max((norm(&t) - nd) / nd);
    })?;
    let name = if quasi_target(p)?.is_some() {
        "conic_quasi_nonexpansive"
    } else {
        "conic_nonexpansive"
    };
    Ok(PropertyReport::new(name, n, worst, CONIC_TOL))
}

/// `Id − J` is `α`-cocoercive (star-cocoercive against `x*` for weak-MVI
/// problems). The violation is `(α‖ΔR‖² − ⟨ΔR, Δx⟩)/‖Δx‖²`.
pub fn check_cocoercive_identity_minus_j(
    p: &InclusionProblem,
    eta: f64,
    rho: f64,
    n: usize,
    rng: &mut StreamRng,
    sampling: &PairSampling,
) -> Result<PropertyReport> {
    conic_lambda(eta, rho)?;
    let alpha = 1.0 - rho / eta;
    let mut worst = f64::NEG_INFINITY;
    resolvent_pairs(p, eta, n, rng, sampling, |x, y, jx, jy| {
        let dx = diff(x, y);
        let nd2 = dot(&dx, &dx);
        if nd2 == 0.0 {
            return;
        }
        let dr: Vec<f64> = (0..x.len()).map(|i| (x[i] - jx[i]) - (y[i] - jy[i])).collect();
        worst = worst.max((alpha * dot(&dr, &dr) - dot(&dr, &dx)) / nd2);
    })?;
    let name = if quasi_target(p)?.is_some() {
        "star_cocoercive_identity_minus_resolvent"
    } else {
        "cocoercive_identity_minus_resolvent"
    };
    Ok(PropertyReport::new(name, n, worst, CONIC_TOL))
}

/// `B = Id + ηF − x̄` is `(1−ηL)`-strongly monotone and `(1+ηL)`-Lipschitz.
/// Returns the strong-monotonicity report followed by the Lipschitz report.
pub fn check_shifted_map(
    p: &InclusionProblem,
    eta: f64,
    n: usize,
    rng: &mut StreamRng,
    sampling: &PairSampling,
) -> Result<[PropertyReport; 2]> {
    check_eta(p, eta)?;
    let anchor = probe_point(p, rng, sampling, 0);
    let b = make_shifted_map(&**p.deterministic_map(), eta, &anchor)?;
    let d = p.dim();
    let (mut bz, mut bw) = (vec![0.0; d], vec![0.0; d]);
    let (mut mono, mut lip) = (f64::NEG_INFINITY, f64::NEG_INFINITY);
    for i in 0..n {
        let z = probe_point(p, rng, sampling, 2 * i);
        let w = probe_point(p, rng, sampling, 2 * i + 1);
        let dz = diff(z.as_slice(), w.as_slice());
        let nd2 = dot(&dz, &dz);
        if nd2 == 0.0 {
            continue;
        }
        b.eval_into(z.as_slice(), &mut bz);
        b.eval_into(w.as_slice(), &mut bw);
        let db = diff(&bz, &bw);
        mono = mono.max((b.mu() * nd2 - dot(&db, &dz)) / nd2);
        lip = lip.max((norm(&db) - b.lipschitz() * nd2.sqrt()) / nd2.sqrt());
    }
    Ok([
        PropertyReport::new("shifted_map_strong_monotonicity", n, mono, STRUCTURE_TOL),
        PropertyReport::new("shifted_map_lipschitz", n, lip, STRUCTURE_TOL),
    ])
}

/// `‖F(x) − F(y)‖ ≤ L‖x − y‖`, violation `‖ΔF‖/‖Δx‖ − L` relative to `max(L, 1)`.
pub fn check_lipschitz(
    p: &InclusionProblem,
    n: usize,
    rng: &mut StreamRng,
    sampling: &PairSampling,
) -> Result<PropertyReport> {
    let f = p.deterministic_map();
    let l = f.lipschitz();
    let d = p.dim();
    let (mut fx, mut fy) = (vec![0.0; d], vec![0.0; d]);
    let mut worst = f64::NEG_INFINITY;
    for i in 0..n {
        let x = probe_point(p, rng, sampling, 2 * i);
        let y = probe_point(p, rng, sampling, 2 * i + 1);
        let nd = x.dist(&y);
        if nd == 0.0 {
            continue;
        }
        f.eval_into(x.as_slice(), &mut fx);
        f.eval_into(y.as_slice(), &mut fy);
        worst = worst.max((norm(&diff(&fx, &fy)) / nd - l) / l.max(1.0));
    }
    Ok(PropertyReport::new("lipschitz", n, worst, 1e-8))
}

/// `‖J(x)−J(y)‖² ≤ ⟨J(x)−J(y), x−y⟩` for the resolvent of `G` at `step`.
pub fn check_firm_nonexpansive(
    g: &dyn ProxOperator,
    dim: usize,
    step: f64,
    n: usize,
    rng: &mut StreamRng,
    radius: f64,
) -> Result<PropertyReport> {
    if let Some(gd) = g.dim() {
        if gd != dim {
            return Err(Error::DimensionMismatch {
                expected: dim,
                found: gd,
            });
        }
    }
    let center = vec![0.0; dim];
    let (mut jx, mut jy) = (vec![0.0; dim], vec![0.0; dim]);
    let mut worst = f64::NEG_INFINITY;
    for _ in 0..n {
        let x = ball_sample(rng, &center, radius);
        let y = ball_sample(rng, &center, radius);
        let dx = diff(&x, &y);
        let nd2 = dot(&dx, &dx);
        if nd2 == 0.0 {
            continue;
        }
        g.resolve_into(step, &x, &mut jx);
        g.resolve_into(step, &y, &mut jy);
        let dj = diff(&jx, &jy);
        worst = worst.max((dot(&dj, &dj) - dot(&dj, &dx)) / nd2);
    }
    Ok(PropertyReport::new(
        "firm_nonexpansive_resolvent",
        n,
        worst,
        STRUCTURE_TOL,
    ))
}

/// `⟨F(x)−F(y), x−y⟩ ≥ −ρ‖F(x)−F(y)‖²` for problems with `G = 0`.
pub fn check_cohypomonotone(
    p: &InclusionProblem,
    rho: f64,
    n: usize,
    rng: &mut StreamRng,
    sampling: &PairSampling,
) -> Result<PropertyReport> {
    if !p.is_unconstrained() {
        return Err(Error::invalid("problem", "cohypomonotonicity check needs G = 0"));
    }
    let f = p.deterministic_map();
    let d = p.dim();
    let (mut fx, mut fy) = (vec![0.0; d], vec![0.0; d]);
    let mut worst = f64::NEG_INFINITY;
    for i in 0..n {
        let x = probe_point(p, rng, sampling, 2 * i);
        let y = probe_point(p, rng, sampling, 2 * i + 1);
        let dx = diff(x.as_slice(), y.as_slice());
        let nd2 = dot(&dx, &dx);
        if nd2 == 0.0 {
            continue;
        }
        f.eval_into(x.as_slice(), &mut fx);
        f.eval_into(y.as_slice(), &mut fy);
        let df = diff(&fx, &fy);
        worst = worst.max((-rho * dot(&df, &df) - dot(&df, &dx)) / nd2);
    }
    Ok(PropertyReport::new("cohypomonotone", n, worst, STRUCTURE_TOL))
}

/// Where [`estimate_weak_mvi_rho`] samples, and the step used to form
/// elements of `(F+G)(x̂)` when `G ≠ 0`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct MviSampling {
    pub radius: f64,
    /// Defaults to `10⁻²/L`.
    pub probe_eta: Option<f64>,
}

impl Default for MviSampling {
    fn default() -> Self {
        MviSampling {
            radius: 10.0,
            probe_eta: None,
        }
    }
}

/// Graph element `(x̂, u)` with `u ∈ (F+G)(x̂)` generated from the sample `x`.
fn graph_element(p: &InclusionProblem, x: &Point, probe_eta: f64) -> Result<(Point, Vec<f64>)> {
    if p.is_unconstrained() {
        Ok((x.clone(), p.deterministic_map().eval(x)?.into_vec()))
    } else {
        let xh = reference_resolvent(p, x, probe_eta, DEFAULT_TOL)?.point;
        let u = diff(x.as_slice(), xh.as_slice())
            .into_iter()
            .map(|v| v / probe_eta)
            .collect();
        Ok((xh, u))
    }
}

fn probe_eta(p: &InclusionProblem, s: &MviSampling) -> f64 {
    s.probe_eta.unwrap_or(1e-2 / p.lipschitz().max(1e-300).max(1e-2))
}

/// Sampled estimate `max(0, sup −⟨u, x̂ − x*⟩/‖u‖²)` over graph elements
/// `(x̂, u)` of `F + G`. Samples are uniform in a ball around `x*` for
/// unconstrained problems and uniform on the feasible set otherwise;
/// elements with `‖u‖ < 10⁻¹⁴` are skipped. The result is an estimate,
/// not a certificate.
pub fn estimate_weak_mvi_rho(
    p: &InclusionProblem,
    solution: &Point,
    n: usize,
    rng: &mut StreamRng,
    sampling: MviSampling,
) -> Result<f64> {
    solution.check_dim(p.dim())?;
    let eta = probe_eta(p, &sampling);
    let mut sup = 0.0f64;
    for _ in 0..n {
        let x = match p.domain {
            Domain::Unconstrained => Point::from_vec(ball_sample(rng, solution.as_slice(), sampling.radius)),
            _ => Point::from_vec(feasible_sample(p, rng, sampling.radius)),
        };
        let (xh, u) = graph_element(p, &x, eta)?;
        let nu2 = dot(&u, &u);
        if nu2.sqrt() < 1e-14 {
            continue;
        }
        let r = -dot(&u, &diff(xh.as_slice(), solution.as_slice())) / nu2;
        sup = sup.max(r);
    }
    Ok(sup)
}

/// `⟨u, x̂ − x*⟩ ≥ −ρ‖u‖²` on sampled graph elements, violation relative to `‖u‖²`.
pub fn check_weak_mvi(
    p: &InclusionProblem,
    solution: &Point,
    rho: f64,
    n: usize,
    rng: &mut StreamRng,
    sampling: MviSampling,
) -> Result<PropertyReport> {
    let eta = probe_eta(p, &sampling);
    let mut worst = f64::NEG_INFINITY;
    for _ in 0..n {
        let x = match p.domain {
            Domain::Unconstrained => Point::from_vec(ball_sample(rng, solution.as_slice(), sampling.radius)),
            _ => Point::from_vec(feasible_sample(p, rng, sampling.radius)),
        };
        let (xh, u) = graph_element(p, &x, eta)?;
        let nu2 = dot(&u, &u);
        if nu2.sqrt() < 1e-14 {
            continue;
        }
        worst = worst.max((-rho * nu2 - dot(&u, &diff(xh.as_slice(), solution.as_slice()))) / nu2);
    }
    Ok(PropertyReport::new("weak_mvi", n, worst, STRUCTURE_TOL))
}

/// Runs every applicable property check for `p` at step `eta`, treating
/// `rho` as the claimed structure constant. Check `i` draws from substream
/// `(seed, 0, i, Probe)`.
pub fn property_suite(p: &InclusionProblem, eta: f64, rho: f64, n: usize, seed: u64) -> Result<Vec<PropertyReport>> {
    check_eta(p, eta)?;
    let sampling = PairSampling::default();
    let mut stream = 0u64;
    let mut next = || {
        stream += 1;
        substream(seed, 0, stream - 1, Lane::Probe)
    };
    let mut out = vec![check_lipschitz(p, n, &mut next()?, &sampling)?];
    out.extend(check_shifted_map(p, eta, n, &mut next()?, &sampling)?);
    out.push(check_firm_nonexpansive(
        &*p.g,
        p.dim(),
        eta,
        n,
        &mut next()?,
        sampling.radius,
    )?);
    out.push(check_conic_nonexpansive(p, eta, rho, n, &mut next()?, &sampling)?);
    out.push(check_cocoercive_identity_minus_j(
        p,
        eta,
        rho,
        n,
        &mut next()?,
        &sampling,
    )?);
    if p.is_unconstrained() && p.assumption.implies_cohypomonotone() {
        out.push(check_cohypomonotone(p, rho, n, &mut next()?, &sampling)?);
    }
    if let (Assumption::WeakMvi { .. }, Some(s)) = (p.assumption, &p.known_solution) {
        out.push(check_weak_mvi(p, s, rho, n, &mut next()?, MviSampling::default())?);
    }
    Ok(out)
}

/// Index and reference residual of the iterate among `x_0, …, x_K` with the
/// smallest reference residual (ties to the smallest `k`). Uses reference
/// resolvents, so it is a diagnostic rather than part of any algorithm.
pub fn best_iterate_by_residual(
    p: &InclusionProblem,
    report: &SolveReport,
    eta: f64,
    tol: f64,
) -> Result<(usize, f64)> {
    let mut best: Option<(usize, f64)> = None;
    for (k, x) in report.iterates().enumerate() {
        let r = residual(p, x, eta, tol)?;
        if best.is_none_or(|(_, b)| r < b) {
            best = Some((k, r));
        }
    }
    Ok(best.expect("at least one iterate"))
}

/// Both sides of the inexact-Halpern energy inequality
/// `K(K+1)/4·‖R(x_K)‖² − (K+1)/(Kα²)·‖x* − x_0‖² ≤ Σ_k ((k+1)(k+2)ε_k²/2 + (k+1)‖R(x_k)‖ε_k)`
/// with `R = Id − J`, evaluated on a Halpern report with measured inner
/// errors `ε_k = ‖J̃(x_k) − J(x_k)‖`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct HalpernEnergy {
    pub lhs: f64,
    pub rhs: f64,
}

pub fn halpern_energy(p: &InclusionProblem, report: &SolveReport, tol: f64) -> Result<HalpernEnergy> {
    let solution = p
        .known_solution
        .as_ref()
        .ok_or_else(|| Error::invalid("known_solution", "energy inequality needs x*"))?;
    let eta = report.params.eta;
    let alpha = report.params.alpha();
    let k_total = report.rows.len();
    let mut rhs = 0.0;
    for row in &report.rows {
        let j = reference_resolvent(p, &row.iterate, eta, tol)?.point;
        let eps = row.resolvent_estimate.dist(&j);
        let r = row.iterate.dist(&j);
        let k = row.k as f64;
        rhs += (k + 1.0) * (k + 2.0) * eps * eps / 2.0 + (k + 1.0) * r * eps;
    }
    let jk = reference_resolvent(p, &report.final_iterate, eta, tol)?.point;
    let rk = report.final_iterate.dist(&jk);
    let kf = k_total as f64;
    let lhs = kf * (kf + 1.0) / 4.0 * rk * rk - (kf + 1.0) / (kf * alpha * alpha) * solution.dist(&report.x0).powi(2);
    Ok(HalpernEnergy { lhs, rhs })
}
