//! Operators, problems, the shifted inner map and solve reports.

use std::fmt;
use std::sync::Arc;

use rand::Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::Matrix;
use crate::outer::{Algorithm, OuterParams};
use crate::point::Point;
use crate::rng::StreamRng;

/// First-order oracle calls charged per FBF iteration (two forward
/// evaluations, one resolvent).
pub const CALLS_PER_FBF_ITERATION: u64 = 2;

/// Single-valued Lipschitz operator `F`.
pub trait SmoothMap: Send + Sync + fmt::Debug {
    fn dim(&self) -> usize;

    fn lipschitz(&self) -> f64;

    /// `out = F(x)`. Slices must have length `dim()`.
    fn eval_into(&self, x: &[f64], out: &mut [f64]);

    /// `out = F̃(x)`, an unbiased sample of `F(x)`.
    fn sample_into(&self, _x: &[f64], _rng: &mut StreamRng, _out: &mut [f64]) -> Result<()> {
        Err(Error::MissingSampler)
    }

    fn has_sampler(&self) -> bool {
        false
    }

    /// Upper bound on `E‖F̃(x) − F(x)‖²`, when known.
    fn variance_bound(&self) -> Option<f64> {
        None
    }

    /// `(M, b)` when `F(x) = Mx + b`.
    fn affine_parts(&self) -> Option<(&Matrix, &[f64])> {
        None
    }

    fn eval(&self, x: &Point) -> Result<Point> {
        x.check_dim(self.dim())?;
        let mut out = vec![0.0; self.dim()];
        self.eval_into(x.as_slice(), &mut out);
        Point::new(out).map_err(|_| Error::non_finite("operator evaluation"))
    }
}

/// Maximally monotone operator `G`, accessed through its resolvent.
pub trait ProxOperator: Send + Sync + fmt::Debug {
    /// Fixed dimension, or `None` for operators defined in every dimension.
    fn dim(&self) -> Option<usize>;

    /// `out = J_{γG}(x)`.
    fn resolve_into(&self, step: f64, x: &[f64], out: &mut [f64]);

    /// True when `G ≡ 0` and the resolvent is the identity.
    fn is_zero(&self) -> bool {
        false
    }

    fn resolve(&self, step: f64, x: &Point) -> Result<Point> {
        if !(step > 0.0 && step.is_finite()) {
            return Err(Error::invalid("step", format!("{step} must be positive")));
        }
        if let Some(d) = self.dim() {
            x.check_dim(d)?;
        }
        let mut out = vec![0.0; x.dim()];
        self.resolve_into(step, x.as_slice(), &mut out);
        Point::new(out).map_err(|_| Error::non_finite("resolvent"))
    }
}

/// `F(x) = Mx + b`.
#[derive(Clone, Debug)]
pub struct AffineMap {
    matrix: Matrix,
    offset: Vec<f64>,
    lipschitz: f64,
}

impl AffineMap {
    /// The Lipschitz constant is the spectral norm of `M`.
    pub fn new(matrix: Matrix, offset: Vec<f64>) -> Result<Self> {
        let lipschitz = matrix.spectral_norm();
        Self::with_lipschitz(matrix, offset, lipschitz)
    }

    pub fn with_lipschitz(matrix: Matrix, offset: Vec<f64>, lipschitz: f64) -> Result<Self> {
        if !matrix.is_square() {
            return Err(Error::invalid("matrix", "affine map needs a square matrix"));
        }
        if offset.len() != matrix.rows() {
            return Err(Error::DimensionMismatch {
                expected: matrix.rows(),
                found: offset.len(),
            });
        }
        if offset.iter().any(|v| !v.is_finite()) {
            return Err(Error::non_finite("affine offset"));
        }
        if !(lipschitz >= 0.0 && lipschitz.is_finite()) {
            return Err(Error::invalid(
                "lipschitz",
                format!("{lipschitz} must be finite and nonnegative"),
            ));
        }
        Ok(AffineMap {
            matrix,
            offset,
            lipschitz,
        })
    }

    pub fn matrix(&self) -> &Matrix {
        &self.matrix
    }

    pub fn offset(&self) -> &[f64] {
        &self.offset
    }
}

impl SmoothMap for AffineMap {
    fn dim(&self) -> usize {
        self.offset.len()
    }

    fn lipschitz(&self) -> f64 {
        self.lipschitz
    }

    #[inline]
    fn eval_into(&self, x: &[f64], out: &mut [f64]) {
        self.matrix.mul_vec_into(x, out);
        for (o, b) in out.iter_mut().zip(&self.offset) {
            *o += b;
        }
    }

    fn affine_parts(&self) -> Option<(&Matrix, &[f64])> {
        Some((&self.matrix, &self.offset))
    }
}

/// `F̃(x) = F(x) + ξ` with `ξ ~ N(0, (σ²/d) I)`, so `E‖ξ‖² = σ²`.
#[derive(Clone, Debug)]
pub struct NoisyMap {
    inner: Arc<dyn SmoothMap>,
    sigma: f64,
    coord_std: f64,
}

impl NoisyMap {
    pub fn new(inner: Arc<dyn SmoothMap>, sigma: f64) -> Result<Self> {
        if !(sigma >= 0.0 && sigma.is_finite()) {
            return Err(Error::invalid(
                "sigma",
                format!("{sigma} must be finite and nonnegative"),
            ));
        }
        let coord_std = sigma / (inner.dim() as f64).sqrt();
        Ok(NoisyMap {
            inner,
            sigma,
            coord_std,
        })
    }

    pub fn sigma(&self) -> f64 {
        self.sigma
    }
}

impl SmoothMap for NoisyMap {
    fn dim(&self) -> usize {
        self.inner.dim()
    }

    fn lipschitz(&self) -> f64 {
        self.inner.lipschitz()
    }

    #[inline]
    fn eval_into(&self, x: &[f64], out: &mut [f64]) {
        self.inner.eval_into(x, out)
    }

    #[inline]
    fn sample_into(&self, x: &[f64], rng: &mut StreamRng, out: &mut [f64]) -> Result<()> {
        self.inner.eval_into(x, out);
        if self.coord_std > 0.0 {
            for o in out.iter_mut() {
                let z: f64 = rng.sample(StandardNormal);
                *o += self.coord_std * z;
            }
        }
        Ok(())
    }

    fn has_sampler(&self) -> bool {
        true
    }

    fn variance_bound(&self) -> Option<f64> {
        Some(self.sigma * self.sigma)
    }

    fn affine_parts(&self) -> Option<(&Matrix, &[f64])> {
        self.inner.affine_parts()
    }
}

/// `A = c·G`, whose resolvent is `J_{γA} = J_{cγG}`.
#[derive(Clone, Copy, Debug)]
pub struct ScaledProx<'a> {
    pub inner: &'a dyn ProxOperator,
    pub scale: f64,
}

impl ScaledProx<'_> {
    #[inline]
    pub fn resolve_into(&self, step: f64, x: &[f64], out: &mut [f64]) {
        if self.inner.is_zero() {
            out.copy_from_slice(x);
        } else {
            self.inner.resolve_into(self.scale * step, x, out);
        }
    }
}

/// Strongly monotone inner map `B(z) = z + ηF(z) − x̄`.
#[derive(Clone, Debug)]
pub struct ShiftedMap<'a> {
    map: &'a dyn SmoothMap,
    eta: f64,
    anchor: Vec<f64>,
    mu: f64,
    lipschitz: f64,
}

/// Builds `B(z) = z + ηF(z) − x̄` with `μ = 1 − ηL`, `L_B = 1 + ηL`.
///
/// Requires `0 < η < 1/L`; otherwise `B` is not strongly monotone.
pub fn make_shifted_map<'a>(f: &'a dyn SmoothMap, eta: f64, anchor: &Point) -> Result<ShiftedMap<'a>> {
    if !(eta > 0.0 && eta.is_finite()) {
        return Err(Error::invalid("eta", format!("{eta} must be positive")));
    }
    anchor.check_dim(f.dim())?;
    let l = f.lipschitz();
    if eta * l >= 1.0 {
        return Err(Error::StepTooLarge { eta, lipschitz: l });
    }
    Ok(ShiftedMap {
        map: f,
        eta,
        anchor: anchor.as_slice().to_vec(),
        mu: 1.0 - eta * l,
        lipschitz: 1.0 + eta * l,
    })
}

impl ShiftedMap<'_> {
    pub fn dim(&self) -> usize {
        self.anchor.len()
    }

    pub fn eta(&self) -> f64 {
        self.eta
    }

    pub fn anchor(&self) -> &[f64] {
        &self.anchor
    }

    pub fn mu(&self) -> f64 {
        self.mu
    }

    pub fn lipschitz(&self) -> f64 {
        self.lipschitz
    }

    pub fn map(&self) -> &dyn SmoothMap {
        self.map
    }

    pub fn has_sampler(&self) -> bool {
        self.map.has_sampler()
    }

    /// Variance of the sampled `B̃`, i.e. `η²σ²`.
    pub fn variance_bound(&self) -> Option<f64> {
        self.map.variance_bound().map(|s2| self.eta * self.eta * s2)
    }

    #[inline]
    pub fn eval_into(&self, z: &[f64], out: &mut [f64]) {
        self.map.eval_into(z, out);
        self.finish(z, out);
    }

    #[inline]
    pub fn sample_into(&self, z: &[f64], rng: &mut StreamRng, out: &mut [f64]) -> Result<()> {
        self.map.sample_into(z, rng, out)?;
        self.finish(z, out);
        Ok(())
    }

    pub fn eval(&self, z: &Point) -> Result<Point> {
        z.check_dim(self.dim())?;
        let mut out = vec![0.0; self.dim()];
        self.eval_into(z.as_slice(), &mut out);
        Point::new(out).map_err(|_| Error::non_finite("shifted map"))
    }

    #[inline]
    fn finish(&self, z: &[f64], out: &mut [f64]) {
        for ((o, zi), a) in out.iter_mut().zip(z).zip(&self.anchor) {
            *o = zi + self.eta * *o - a;
        }
    }
}

/// Running count of first-order oracle calls.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub struct OracleCounter {
    calls: u64,
}

impl OracleCounter {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn calls(&self) -> u64 {
        self.calls
    }

    pub fn charge(&mut self, calls: u64) {
        self.calls = self.calls.checked_add(calls).expect("oracle counter overflow");
    }

    pub fn charge_fbf_iterations(&mut self, iterations: u64) {
        self.charge(CALLS_PER_FBF_ITERATION * iterations);
    }
}

/// Structural assumption on `F + G`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case")]
pub enum Assumption {
    Monotone,
    Cohypomonotone { rho: f64 },
    WeakMvi { rho: f64 },
    Unclassified,
}

impl Assumption {
    /// The `ρ` carried by the assumption (zero for monotone or unclassified).
    pub fn rho(&self) -> f64 {
        match *self {
            Assumption::Cohypomonotone { rho } | Assumption::WeakMvi { rho } => rho,
            _ => 0.0,
        }
    }

    /// Cohypomonotone (or monotone) problems also satisfy the weak MVI condition.
    pub fn implies_cohypomonotone(&self) -> bool {
        matches!(self, Assumption::Monotone | Assumption::Cohypomonotone { .. })
    }

    pub fn is_classified(&self) -> bool {
        !matches!(self, Assumption::Unclassified)
    }
}

/// Feasible region implied by `G`, used when sampling test points.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case")]
pub enum Domain {
    Unconstrained,
    Simplices { blocks: Vec<usize> },
    Box { lower: Vec<f64>, upper: Vec<f64> },
}

/// `0 ∈ F(x) + G(x)` together with its structure constants.
#[derive(Clone, Debug)]
pub struct InclusionProblem {
    pub label: String,
    pub f: Arc<dyn SmoothMap>,
    pub g: Arc<dyn ProxOperator>,
    pub assumption: Assumption,
    pub known_solution: Option<Point>,
    pub domain: Domain,
    base: Arc<dyn SmoothMap>,
}

impl InclusionProblem {
    pub fn new(
        label: impl Into<String>,
        f: Arc<dyn SmoothMap>,
        g: Arc<dyn ProxOperator>,
        assumption: Assumption,
        domain: Domain,
    ) -> Result<Self> {
        let d = f.dim();
        if d == 0 {
            return Err(Error::invalid("dimension", "must be at least 1"));
        }
        if let Some(gd) = g.dim() {
            if gd != d {
                return Err(Error::DimensionMismatch { expected: d, found: gd });
            }
        }
        let domain_dim = match &domain {
            Domain::Unconstrained => d,
            Domain::Simplices { blocks } => blocks.iter().sum(),
            Domain::Box { lower, .. } => lower.len(),
        };
        if domain_dim != d {
            return Err(Error::DimensionMismatch {
                expected: d,
                found: domain_dim,
            });
        }
        check_assumption(&assumption, f.lipschitz())?;
        Ok(InclusionProblem {
            label: label.into(),
            base: f.clone(),
            f,
            g,
            assumption,
            known_solution: None,
            domain,
        })
    }

    pub fn dim(&self) -> usize {
        self.f.dim()
    }

    pub fn lipschitz(&self) -> f64 {
        self.f.lipschitz()
    }

    pub fn is_unconstrained(&self) -> bool {
        self.g.is_zero()
    }

    pub fn with_known_solution(mut self, x: Point) -> Result<Self> {
        x.check_dim(self.dim())?;
        self.known_solution = Some(x);
        Ok(self)
    }

    pub fn with_assumption(mut self, assumption: Assumption) -> Result<Self> {
        check_assumption(&assumption, self.lipschitz())?;
        self.assumption = assumption;
        Ok(self)
    }

    /// Attaches a Gaussian oracle with `E‖F̃(x) − F(x)‖² = σ²` to the
    /// deterministic operator. Replaces any previously attached noise.
    pub fn with_noise(mut self, sigma: f64) -> Result<Self> {
        self.f = Arc::new(NoisyMap::new(self.base.clone(), sigma)?);
        Ok(self)
    }

    /// The operator without any attached noise model.
    pub fn deterministic_map(&self) -> &Arc<dyn SmoothMap> {
        &self.base
    }
}

fn check_assumption(a: &Assumption, lipschitz: f64) -> Result<()> {
    if let Assumption::Cohypomonotone { rho } | Assumption::WeakMvi { rho } = *a {
        if !(rho >= 0.0 && rho.is_finite()) {
            return Err(Error::invalid("rho", format!("{rho} must be finite and nonnegative")));
        }
        if rho * lipschitz >= 1.0 {
            return Err(Error::invalid(
                "rho",
                format!("rho = {rho} must be below 1/L = {}", 1.0 / lipschitz),
            ));
        }
    }
    Ok(())
}

/// One outer iteration of a solve.
#[derive(Clone, Debug, Serialize)]
pub struct TraceRow {
    pub k: usize,
    /// Inner iterations spent approximating the resolvent at `x_k`.
    pub inner_iters: u64,
    /// Oracle calls through the end of iteration `k`.
    pub cum_oracle_calls: u64,
    pub iterate: Point,
    /// The inexact resolvent `J̃(x_k)` returned by the inner solver.
    pub resolvent_estimate: Point,
    /// `‖x_k − J̃(x_k)‖ / η`.
    pub residual_estimate: Option<f64>,
    pub dist_to_solution: Option<f64>,
    /// Wall-clock nanoseconds since the solve started, at the end of iteration `k`.
    pub elapsed_ns: u64,
}

#[derive(Clone, Debug, Serialize)]
pub struct SolveReport {
    pub algorithm: Algorithm,
    pub params: OuterParams,
    pub problem: String,
    pub x0: Point,
    /// Rows for `k = 0, …, K−1`.
    pub rows: Vec<TraceRow>,
    /// `x_K`.
    pub final_iterate: Point,
    /// Index of the uniformly random output iterate (stochastic solvers).
    pub uniform_index: Option<usize>,
}

impl SolveReport {
    /// `x_k` for `k = 0, …, K`.
    pub fn iterate(&self, k: usize) -> Option<&Point> {
        if k < self.rows.len() {
            Some(&self.rows[k].iterate)
        } else if k == self.rows.len() {
            Some(&self.final_iterate)
        } else {
            None
        }
    }

    pub fn iterates(&self) -> impl Iterator<Item = &Point> {
        self.rows
            .iter()
            .map(|r| &r.iterate)
            .chain(std::iter::once(&self.final_iterate))
    }

    pub fn total_oracle_calls(&self) -> u64 {
        self.rows.last().map_or(0, |r| r.cum_oracle_calls)
    }

    /// For `G ≡ 0`, the iterate among `x_0, …, x_K` with smallest `‖F(x_k)‖`
    /// (ties resolved to the smallest `k`).
    pub fn best_by_operator_norm(&self, problem: &InclusionProblem) -> Result<(usize, Point)> {
        if !problem.is_unconstrained() {
            return Err(Error::invalid("problem", "operator-norm selection requires G = 0"));
        }
        let mut best: Option<(usize, f64)> = None;
        for (k, x) in self.iterates().enumerate() {
            let v = problem.deterministic_map().eval(x)?.norm();
            if best.is_none_or(|(_, b)| v < b) {
                best = Some((k, v));
            }
        }
        let (k, _) = best.expect("report has at least the final iterate");
        Ok((k, self.iterate(k).cloned().expect("index in range")))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::prox::ZeroOperator;

    fn identity_1d() -> AffineMap {
        AffineMap::new(Matrix::identity(1), vec![0.0]).unwrap()
    }

    #[test]
    fn shifted_map_examples() {
        let zero = AffineMap::with_lipschitz(Matrix::zeros(1, 1), vec![0.0], 0.0).unwrap();
        let b = make_shifted_map(&zero, 0.5, &Point::zeros(1)).unwrap();
        assert_eq!((b.mu(), b.lipschitz()), (1.0, 1.0));
        assert_eq!(b.eval(&Point::new(vec![3.0]).unwrap()).unwrap()[0], 3.0);

        let id = identity_1d();
        let anchor = Point::new(vec![1.0]).unwrap();
        let b = make_shifted_map(&id, 0.5, &anchor).unwrap();
        assert_eq!((b.mu(), b.lipschitz()), (0.5, 1.5));
        assert_eq!(b.eval(&Point::new(vec![2.0]).unwrap()).unwrap()[0], 2.0);

        assert!(matches!(
            make_shifted_map(&id, 1.0, &anchor),
            Err(Error::StepTooLarge { .. })
        ));
        assert!(make_shifted_map(&id, 0.0, &anchor).is_err());
        assert!(make_shifted_map(&id, 0.5, &Point::zeros(2)).is_err());
    }

    #[test]
    fn noise_has_requested_second_moment() {
        use crate::rng::{substream, Lane};
        let base: Arc<dyn SmoothMap> = Arc::new(AffineMap::new(Matrix::identity(4), vec![0.0; 4]).unwrap());
        let noisy = NoisyMap::new(base, 0.3).unwrap();
        let mut rng = substream(1, 0, 0, Lane::Noise).unwrap();
        let x = [0.0; 4];
        let mut out = [0.0; 4];
        let n = 20_000;
        let mut acc = 0.0;
        for _ in 0..n {
            noisy.sample_into(&x, &mut rng, &mut out).unwrap();
            acc += out.iter().map(|v| v * v).sum::<f64>();
        }
        let m = acc / n as f64;
        assert!((m - 0.09).abs() < 0.005, "second moment {m}");
    }

    #[test]
    fn problem_rejects_rho_outside_range() {
        let f: Arc<dyn SmoothMap> = Arc::new(identity_1d());
        let g: Arc<dyn ProxOperator> = Arc::new(ZeroOperator);
        let ok = InclusionProblem::new(
            "t",
            f.clone(),
            g.clone(),
            Assumption::WeakMvi { rho: 0.5 },
            Domain::Unconstrained,
        );
        assert!(ok.is_ok());
        let bad = InclusionProblem::new(
            "t",
            f,
            g,
            Assumption::Cohypomonotone { rho: 1.0 },
            Domain::Unconstrained,
        );
        assert!(bad.is_err());
    }

    #[test]
    fn oracle_counter_charges_two_per_iteration() {
        let mut c = OracleCounter::new();
        c.charge_fbf_iterations(5);
        assert_eq!(c.calls(), 10);
    }
}
