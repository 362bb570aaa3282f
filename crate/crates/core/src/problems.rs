//! Test-problem factories with known structure constants.

use std::f64::consts::PI;
use std::sync::Arc;

use rand::Rng;
use rand_distr::Exp1;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::Matrix;
use crate::model::{AffineMap, Assumption, Domain, InclusionProblem, ProxOperator, SmoothMap};
use crate::point::{dot, Point};
use crate::prox::{project_simplex_into, BoxSet, L1Norm, SimplexProduct, ZeroOperator};
use crate::rng::{substream, Lane, StreamRng};

/// Block-diagonal planar rotations scaled by `L`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct RotationSpec {
    pub lipschitz: f64,
    /// Rotation angle in `(π/2, π)`.
    pub theta: f64,
    pub dim: usize,
}

impl RotationSpec {
    pub fn new(lipschitz: f64, theta: f64, dim: usize) -> Self {
        RotationSpec { lipschitz, theta, dim }
    }

    /// `ρ = −cos(θ)/L`, the exact cohypomonotonicity constant.
    pub fn rho(&self) -> f64 {
        -self.theta.cos() / self.lipschitz
    }

    fn validate(&self) -> Result<()> {
        if !(self.lipschitz > 0.0 && self.lipschitz.is_finite()) {
            return Err(Error::invalid("lipschitz", "must be positive and finite"));
        }
        if !(self.theta > PI / 2.0 && self.theta < PI) {
            return Err(Error::invalid(
                "theta",
                format!("{} must lie in (pi/2, pi)", self.theta),
            ));
        }
        if self.dim == 0 || !self.dim.is_multiple_of(2) {
            return Err(Error::invalid("dim", format!("{} must be positive and even", self.dim)));
        }
        Ok(())
    }
}

/// `F(x) = L·Q_θ·x` with `G = 0`, cohypomonotone with `ρ = −cos θ / L` and
/// solution `x* = 0`.
pub fn make_rotation(spec: &RotationSpec) -> Result<InclusionProblem> {
    spec.validate()?;
    let (s, c) = spec.theta.sin_cos();
    let l = spec.lipschitz;
    let mut m = Matrix::zeros(spec.dim, spec.dim);
    for b in (0..spec.dim).step_by(2) {
        m[(b, b)] = l * c;
        m[(b, b + 1)] = -l * s;
        m[(b + 1, b)] = l * s;
        m[(b + 1, b + 1)] = l * c;
    }
    let f = AffineMap::with_lipschitz(m, vec![0.0; spec.dim], l)?;
    InclusionProblem::new(
        format!("rotation(L={l}, theta={}, d={})", spec.theta, spec.dim),
        Arc::new(f),
        Arc::new(ZeroOperator),
        Assumption::Cohypomonotone { rho: spec.rho() },
        Domain::Unconstrained,
    )?
    .with_known_solution(Point::zeros(spec.dim))
}

/// Bilinear game `min_{x∈Δ^m} max_{y∈Δ^n} ⟨x, Ay⟩` as the monotone
/// inclusion `F(x, y) = (Ay, −Aᵀx)`, `G` the normal cone of `Δ^m × Δ^n`.
pub fn make_matrix_game(a: &Matrix, solution: Option<Point>) -> Result<InclusionProblem> {
    let (m, n) = (a.rows(), a.cols());
    let d = m + n;
    let mut full = Matrix::zeros(d, d);
    for i in 0..m {
        for j in 0..n {
            full[(i, m + j)] = a[(i, j)];
            full[(m + j, i)] = -a[(i, j)];
        }
    }
    let f = AffineMap::with_lipschitz(full, vec![0.0; d], a.spectral_norm())?;
    let p = InclusionProblem::new(
        format!("matrix_game({m}x{n})"),
        Arc::new(f),
        Arc::new(SimplexProduct::new(vec![m, n])?),
        Assumption::Monotone,
        Domain::Simplices { blocks: vec![m, n] },
    )?;
    match solution {
        Some(s) => p.with_known_solution(s),
        None => Ok(p),
    }
}

/// Ratio game data `f(x, y) = ⟨x, Ry⟩ / ⟨x, Sy⟩` with `S > 0` entrywise.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RatioGameSpec {
    pub r: Matrix,
    pub s: Matrix,
    /// Weak-MVI constant; estimated by sampling when absent.
    #[serde(default)]
    pub rho: Option<f64>,
    /// Solution point; computed when absent.
    #[serde(default)]
    pub solution: Option<Point>,
    /// Lipschitz constant; estimated by sampling when absent.
    #[serde(default)]
    pub lipschitz: Option<f64>,
}

/// Frozen constants of the shipped instance, produced by the sampling
/// estimators (10⁴ feasible points, fixed seeds).
pub mod shipped_ratio {
    pub const R: [[f64; 2]; 2] = [[0.74, -0.43], [0.21, 0.56]];
    pub const S: [[f64; 2]; 2] = [[1.22, 1.42], [1.36, 1.42]];
    pub const SOLUTION: [f64; 4] = [
        0.215_786_603_638_157_1,
        0.784_213_396_361_843,
        0.637_004_445_536_723,
        0.362_995_554_463_277,
    ];
    pub const LIPSCHITZ: f64 = 3.614_113_823_266_188;
    pub const RHO: f64 = 0.088_251_160_749_626_63;
}

impl RatioGameSpec {
    pub fn new(r: Matrix, s: Matrix) -> Self {
        RatioGameSpec {
            r,
            s,
            rho: None,
            solution: None,
            lipschitz: None,
        }
    }

    /// The 2×2 instance used throughout the test suite.
    pub fn shipped() -> Self {
        let rows = |a: [[f64; 2]; 2]| Matrix::from_rows(&[a[0].to_vec(), a[1].to_vec()]).expect("finite fixture");
        RatioGameSpec {
            r: rows(shipped_ratio::R),
            s: rows(shipped_ratio::S),
            rho: Some(shipped_ratio::RHO),
            solution: Some(Point::new(shipped_ratio::SOLUTION.to_vec()).expect("finite fixture")),
            lipschitz: Some(shipped_ratio::LIPSCHITZ),
        }
    }
}

/// `F = (∇_x f, −∇_y f)` of the ratio game, evaluated at the projection of
/// its argument onto `Δ^m × Δ^n`. The extension keeps `F` globally
/// Lipschitz with the constant it has on the feasible set and leaves the
/// solution set unchanged.
#[derive(Clone, Debug)]
pub struct RatioGameMap {
    r: Matrix,
    s: Matrix,
    lipschitz: f64,
}

impl RatioGameMap {
    fn new(r: Matrix, s: Matrix) -> Result<Self> {
        if r.rows() != s.rows() || r.cols() != s.cols() {
            return Err(Error::DimensionMismatch {
                expected: r.rows() * r.cols(),
                found: s.rows() * s.cols(),
            });
        }
        for i in 0..s.rows() {
            if s.row(i).iter().any(|v| *v <= 0.0) {
                return Err(Error::invalid("S", "all entries must be positive"));
            }
        }
        Ok(RatioGameMap { r, s, lipschitz: 0.0 })
    }

    fn split(&self) -> (usize, usize) {
        (self.r.rows(), self.r.cols())
    }
}

impl SmoothMap for RatioGameMap {
    fn dim(&self) -> usize {
        self.r.rows() + self.r.cols()
    }

    fn lipschitz(&self) -> f64 {
        self.lipschitz
    }

    fn eval_into(&self, z: &[f64], out: &mut [f64]) {
        let (m, n) = self.split();
        let mut x = vec![0.0; m];
        let mut y = vec![0.0; n];
        project_simplex_into(&z[..m], &mut x);
        project_simplex_into(&z[m..], &mut y);
        let ry = self.r.mul_vec(&y);
        let sy = self.s.mul_vec(&y);
        let rx = self.r.transpose().mul_vec(&x);
        let sx = self.s.transpose().mul_vec(&x);
        let num = dot(&x, &ry);
        let den = dot(&x, &sy);
        let q = num / (den * den);
        for i in 0..m {
            out[i] = ry[i] / den - q * sy[i];
        }
        for j in 0..n {
            out[m + j] = -(rx[j] / den - q * sx[j]);
        }
    }
}

/// Writes a uniform (Dirichlet(1, …, 1)) sample of `Δ^{len}` into `out`.
pub(crate) fn sample_simplex(rng: &mut StreamRng, out: &mut [f64]) {
    let mut total = 0.0;
    for o in out.iter_mut() {
        let e: f64 = rng.sample(Exp1);
        *o = e;
        total += e;
    }
    out.iter_mut().for_each(|o| *o /= total);
}

/// Uniform sample of a product of simplices.
pub(crate) fn sample_simplex_product(rng: &mut StreamRng, blocks: &[usize]) -> Vec<f64> {
    let mut out = vec![0.0; blocks.iter().sum()];
    let mut start = 0;
    for &len in blocks {
        sample_simplex(rng, &mut out[start..start + len]);
        start += len;
    }
    out
}

/// Twice the largest difference quotient of `map` over `samples` feasible
/// pairs; odd-numbered pairs are local (`y = x + 10⁻³(u − x)`).
pub fn estimate_lipschitz_on_simplices(
    map: &dyn SmoothMap,
    blocks: &[usize],
    samples: usize,
    seed: u64,
) -> Result<f64> {
    let d = map.dim();
    let mut rng = substream(seed, 0, 0, Lane::Probe)?;
    let (mut fa, mut fb) = (vec![0.0; d], vec![0.0; d]);
    let mut best = 0.0f64;
    for i in 0..samples {
        let a = sample_simplex_product(&mut rng, blocks);
        let u = sample_simplex_product(&mut rng, blocks);
        let b: Vec<f64> = if i % 2 == 1 {
            a.iter().zip(&u).map(|(x, v)| x + 1e-3 * (v - x)).collect()
        } else {
            u
        };
        let dist = a.iter().zip(&b).map(|(x, y)| (x - y) * (x - y)).sum::<f64>().sqrt();
        if dist == 0.0 {
            continue;
        }
        map.eval_into(&a, &mut fa);
        map.eval_into(&b, &mut fb);
        let df = fa.iter().zip(&fb).map(|(x, y)| (x - y) * (x - y)).sum::<f64>().sqrt();
        best = best.max(df / dist);
    }
    Ok(2.0 * best)
}

/// Samples used when estimating ratio-game constants.
pub const RATIO_ESTIMATION_SAMPLES: usize = 10_000;
/// Seed used when estimating ratio-game constants.
pub const RATIO_ESTIMATION_SEED: u64 = 2024;

/// Ratio game over `Δ^m × Δ^n`. Missing constants are estimated: `L̂` by
/// [`estimate_lipschitz_on_simplices`], `x*` by a long extragradient run and
/// `ρ̂` by [`crate::verify::estimate_weak_mvi_rho`].
pub fn make_ratio_game(spec: &RatioGameSpec) -> Result<InclusionProblem> {
    let mut map = RatioGameMap::new(spec.r.clone(), spec.s.clone())?;
    let (m, n) = map.split();
    let blocks = vec![m, n];
    map.lipschitz = match spec.lipschitz {
        Some(l) => l,
        None => estimate_lipschitz_on_simplices(&map, &blocks, RATIO_ESTIMATION_SAMPLES, RATIO_ESTIMATION_SEED)?,
    };
    if !(map.lipschitz >= 0.0 && map.lipschitz.is_finite()) {
        return Err(Error::invalid("lipschitz", "ratio game constant must be finite"));
    }
    let label = format!("ratio_game({m}x{n})");
    let map: Arc<dyn SmoothMap> = Arc::new(map);
    let g: Arc<dyn ProxOperator> = Arc::new(SimplexProduct::new(blocks.clone())?);
    let domain = Domain::Simplices { blocks: blocks.clone() };
    let provisional = InclusionProblem::new(
        label.clone(),
        map.clone(),
        g.clone(),
        Assumption::WeakMvi { rho: 0.0 },
        domain.clone(),
    )?;
    let solution = match &spec.solution {
        Some(s) => s.clone(),
        None => projected_extragradient(&provisional, 200_000)?,
    };
    let rho = match spec.rho {
        Some(r) => r,
        None => {
            let mut rng = substream(RATIO_ESTIMATION_SEED, 0, 1, Lane::Probe)?;
            crate::verify::estimate_weak_mvi_rho(
                &provisional,
                &solution,
                RATIO_ESTIMATION_SAMPLES,
                &mut rng,
                crate::verify::MviSampling::default(),
            )?
        }
    };
    InclusionProblem::new(label, map, g, Assumption::WeakMvi { rho }, domain)?.with_known_solution(solution)
}

/// Projected extragradient from the barycentre with step `1/(2L)`.
fn projected_extragradient(p: &InclusionProblem, iters: usize) -> Result<Point> {
    let d = p.dim();
    let step = 0.5 / p.lipschitz().max(f64::MIN_POSITIVE);
    let mut z = vec![0.0; d];
    if let Domain::Simplices { blocks } = &p.domain {
        let mut start = 0;
        for &len in blocks {
            z[start..start + len].iter_mut().for_each(|v| *v = 1.0 / len as f64);
            start += len;
        }
    }
    let (mut fz, mut tmp, mut w) = (vec![0.0; d], vec![0.0; d], vec![0.0; d]);
    for _ in 0..iters {
        p.f.eval_into(&z, &mut fz);
        for i in 0..d {
            tmp[i] = z[i] - step * fz[i];
        }
        p.g.resolve_into(step, &tmp, &mut w);
        p.f.eval_into(&w, &mut fz);
        for i in 0..d {
            tmp[i] = z[i] - step * fz[i];
        }
        p.g.resolve_into(step, &tmp, &mut z);
    }
    Point::new(z).map_err(|_| Error::non_finite("extragradient"))
}

/// Nonsmooth part of an affine problem.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case")]
pub enum Regularizer {
    None,
    Box { lower: Vec<f64>, upper: Vec<f64> },
    L1 { lambda: f64 },
}

/// `F(x) = Mx + b` with an optional box constraint or ℓ₁ term. Tagged
/// monotone when `M + Mᵀ ⪰ 0`, otherwise unclassified. For `G = 0` and
/// invertible `M` the solution `−M⁻¹b` is attached.
pub fn make_affine(m: &Matrix, b: &[f64], reg: &Regularizer) -> Result<InclusionProblem> {
    let f = AffineMap::new(m.clone(), b.to_vec())?;
    let d = f.dim();
    let (g, domain): (Arc<dyn ProxOperator>, Domain) = match reg {
        Regularizer::None => (Arc::new(ZeroOperator), Domain::Unconstrained),
        Regularizer::Box { lower, upper } => (
            Arc::new(BoxSet::new(lower.clone(), upper.clone())?),
            Domain::Box {
                lower: lower.clone(),
                upper: upper.clone(),
            },
        ),
        Regularizer::L1 { lambda } => (Arc::new(L1Norm::new(*lambda)?), Domain::Unconstrained),
    };
    let scale = f.lipschitz().max(1.0);
    let assumption = if m.min_symmetric_eigenvalue()? >= -1e-12 * scale {
        Assumption::Monotone
    } else {
        Assumption::Unclassified
    };
    let unconstrained = g.is_zero();
    let p = InclusionProblem::new(format!("affine(d={d})"), Arc::new(f), g, assumption, domain)?;
    if unconstrained {
        if let Ok(z) = m.solve(&b.iter().map(|v| -v).collect::<Vec<_>>()) {
            if let Ok(x) = Point::new(z) {
                return p.with_known_solution(x);
            }
        }
    }
    Ok(p)
}
