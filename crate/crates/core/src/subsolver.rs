//! Inner solvers for the resolvent subproblem `0 ∈ A(z) + B(z)`, where
//! `A = ηG` and `B(z) = z + ηF(z) − x̄`: deterministic and stochastic
//! forward-backward-forward, and the multilevel Monte Carlo estimator built
//! on the stochastic variant.

use rand::RngCore;
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::model::{ScaledProx, ShiftedMap, CALLS_PER_FBF_ITERATION};
use crate::point::Point;
use crate::rng::{substream, Lane, StreamRng};

/// Draws per parallel block in [`mlmc_average`]. Blocks are summed
/// sequentially and then combined in block order.
const MLMC_BLOCK: u64 = 1024;

#[derive(Clone, Debug, PartialEq)]
pub struct InnerSolveResult {
    pub z_out: Point,
    pub oracle_calls: u64,
    pub iterations: u64,
    /// MLMC levels drawn, one per estimator draw.
    pub levels_drawn: Vec<u8>,
}

impl InnerSolveResult {
    fn plain(z: Vec<f64>, iterations: u64) -> Result<Self> {
        Ok(InnerSolveResult {
            z_out: Point::new(z).map_err(|_| Error::non_finite("inner solver iterate"))?,
            oracle_calls: CALLS_PER_FBF_ITERATION * iterations,
            iterations,
            levels_drawn: Vec::new(),
        })
    }
}

fn check_start(z0: &Point, b: &ShiftedMap) -> Result<()> {
    z0.check_dim(b.dim())?;
    z0.ensure_finite("inner solver start")
}

/// Scratch buffers for one FBF trajectory.
struct FbfState {
    z: Vec<f64>,
    bz: Vec<f64>,
    tmp: Vec<f64>,
    w: Vec<f64>,
    bw: Vec<f64>,
    steps: u64,
}

impl FbfState {
    fn new(z0: &[f64]) -> Self {
        let d = z0.len();
        FbfState {
            z: z0.to_vec(),
            bz: vec![0.0; d],
            tmp: vec![0.0; d],
            w: vec![0.0; d],
            bw: vec![0.0; d],
            steps: 0,
        }
    }

    /// Resolvent half-step followed by the forward correction, given `B(z)` in `bz`.
    #[inline]
    fn half_steps(&mut self, tau: f64, a: ScaledProx) {
        for ((t, z), bz) in self.tmp.iter_mut().zip(&self.z).zip(&self.bz) {
            *t = z - tau * bz;
        }
        a.resolve_into(tau, &self.tmp, &mut self.w);
    }

    #[inline]
    fn correct(&mut self, tau: f64) {
        for (((z, w), bz), bw) in self.z.iter_mut().zip(&self.w).zip(&self.bz).zip(&self.bw) {
            *z = w + tau * (bz - bw);
        }
        self.steps += 1;
    }

    #[inline]
    fn step(&mut self, a: ScaledProx, b: &ShiftedMap) {
        let tau = 0.5 / b.lipschitz();
        b.eval_into(&self.z, &mut self.bz);
        self.half_steps(tau, a);
        b.eval_into(&self.w, &mut self.bw);
        self.correct(tau);
    }

    #[inline]
    fn stochastic_step(&mut self, a: ScaledProx, b: &ShiftedMap, rng: &mut StreamRng) -> Result<()> {
        let tau = stochastic_step(self.steps, b.mu(), b.lipschitz());
        b.sample_into(&self.z, rng, &mut self.bz)?;
        self.half_steps(tau, a);
        b.sample_into(&self.w, rng, &mut self.bw)?;
        self.correct(tau);
        Ok(())
    }
}

/// `N` deterministic FBF iterations with fixed step `τ = 1/(2L_B)`.
/// `N = 0` returns `z0`.
pub fn fbf_run(z0: &Point, n: u64, a: ScaledProx, b: &ShiftedMap) -> Result<InnerSolveResult> {
    check_start(z0, b)?;
    let mut s = FbfState::new(z0.as_slice());
    for _ in 0..n {
        s.step(a, b);
    }
    InnerSolveResult::plain(s.z, n)
}

/// Step size `τ_t = 2/((t+1)μ + 6L_B)` of the stochastic FBF schedule.
pub fn stochastic_step(t: u64, mu: f64, l_b: f64) -> f64 {
    2.0 / ((t + 1) as f64 * mu + 6.0 * l_b)
}

/// `N` stochastic FBF iterations with fresh samples of `B̃` at both forward
/// evaluations and the decaying step schedule.
pub fn fbf_stochastic_run(
    z0: &Point,
    n: u64,
    a: ScaledProx,
    b: &ShiftedMap,
    rng: &mut StreamRng,
) -> Result<InnerSolveResult> {
    check_start(z0, b)?;
    if !b.has_sampler() {
        return Err(Error::MissingSampler);
    }
    let mut s = FbfState::new(z0.as_slice());
    for _ in 0..n {
        s.stochastic_step(a, b, rng)?;
    }
    InnerSolveResult::plain(s.z, n)
}

/// `I ~ Geom(1/2)` on `{1, 2, …}` with `P(I = i) = 2^{-i}`.
pub fn geometric_level(rng: &mut StreamRng) -> u32 {
    rng.next_u64().trailing_zeros() + 1
}

/// `i_N = max{i : 2^i ≤ N}`.
pub fn max_level(n: u64) -> u32 {
    assert!(n >= 1, "max_level needs N >= 1");
    63 - n.leading_zeros()
}

/// Runs one coupled stochastic FBF trajectory for `2^top` steps and
/// returns the checkpoints `y^0, …, y^top` where `y^i` is the iterate after
/// `2^i` steps.
fn coupled_checkpoints(
    z0: &Point,
    top: u32,
    a: ScaledProx,
    b: &ShiftedMap,
    rng: &mut StreamRng,
) -> Result<(Vec<Vec<f64>>, u64)> {
    let mut s = FbfState::new(z0.as_slice());
    let mut checkpoints = Vec::with_capacity(top as usize + 1);
    for i in 0..=top {
        let target = 1u64 << i;
        while s.steps < target {
            s.stochastic_step(a, b, rng)?;
        }
        checkpoints.push(s.z.clone());
    }
    Ok((checkpoints, s.steps))
}

/// MLMC output for a given level `I`: `y^0 + 2^I(y^I − y^{I−1})` when
/// `2^I ≤ N`, otherwise `y^0`. All levels share one noise trajectory.
pub fn mlmc_fbf_at_level(
    z0: &Point,
    n: u64,
    level: u32,
    a: ScaledProx,
    b: &ShiftedMap,
    rng: &mut StreamRng,
) -> Result<InnerSolveResult> {
    check_mlmc(z0, n, b)?;
    if level == 0 {
        return Err(Error::invalid("level", "MLMC levels start at 1"));
    }
    let mut st = MlmcState::new(z0.dim());
    st.draw(z0.as_slice(), n, level, a, b, rng)?;
    let mut r = InnerSolveResult::plain(st.fbf.z, st.fbf.steps)?;
    r.levels_drawn.push(level.min(u8::MAX as u32) as u8);
    Ok(r)
}

/// Reusable buffers for repeated MLMC draws.
struct MlmcState {
    fbf: FbfState,
    y0: Vec<f64>,
    lo: Vec<f64>,
}

impl MlmcState {
    fn new(d: usize) -> Self {
        MlmcState {
            fbf: FbfState::new(&vec![0.0; d]),
            y0: vec![0.0; d],
            lo: vec![0.0; d],
        }
    }

    /// One draw at `level` from `z0`; the output is left in `fbf.z`.
    fn draw(
        &mut self,
        z0: &[f64],
        n: u64,
        level: u32,
        a: ScaledProx,
        b: &ShiftedMap,
        rng: &mut StreamRng,
    ) -> Result<()> {
        let s = &mut self.fbf;
        s.z.copy_from_slice(z0);
        s.steps = 0;
        s.stochastic_step(a, b, rng)?;
        if level <= max_level(n) {
            self.y0.copy_from_slice(&s.z);
            let half = 1u64 << (level - 1);
            while s.steps < half {
                s.stochastic_step(a, b, rng)?;
            }
            self.lo.copy_from_slice(&s.z);
            while s.steps < 2 * half {
                s.stochastic_step(a, b, rng)?;
            }
            let w = (2 * half) as f64;
            for ((z, y), l) in s.z.iter_mut().zip(&self.y0).zip(&self.lo) {
                *z = y + w * (*z - l);
            }
        }
        Ok(())
    }
}

/// One MLMC estimator draw. The level is drawn first from `rng`, and the
/// remainder of the stream drives the FBF noise.
pub fn mlmc_fbf(z0: &Point, n: u64, a: ScaledProx, b: &ShiftedMap, rng: &mut StreamRng) -> Result<InnerSolveResult> {
    check_mlmc(z0, n, b)?;
    let level = geometric_level(rng);
    mlmc_fbf_at_level(z0, n, level, a, b, rng)
}

fn check_mlmc(z0: &Point, n: u64, b: &ShiftedMap) -> Result<()> {
    if n < 2 {
        return Err(Error::invalid("N", format!("MLMC needs N >= 2, got {n}")));
    }
    check_start(z0, b)?;
    if !b.has_sampler() {
        return Err(Error::MissingSampler);
    }
    Ok(())
}

/// The full distribution of the MLMC output for one noise trajectory.
#[derive(Clone, Debug)]
pub struct MlmcEnumeration {
    /// `y^0, …, y^{i_N}`.
    pub checkpoints: Vec<Point>,
    /// `(probability, output)` for every distinct outcome. The first entry
    /// is `y^0`, carrying the mass of all levels with `2^I > N`.
    pub outcomes: Vec<(f64, Point)>,
    pub mean: Point,
    /// Trace of the output covariance.
    pub variance: f64,
    /// Iterations needed to produce every outcome.
    pub iterations: u64,
}

/// Enumerates all levels `I` against a single coupled trajectory.
pub fn mlmc_enumerate(
    z0: &Point,
    n: u64,
    a: ScaledProx,
    b: &ShiftedMap,
    rng: &mut StreamRng,
) -> Result<MlmcEnumeration> {
    check_mlmc(z0, n, b)?;
    let top = max_level(n);
    let (ys, steps) = coupled_checkpoints(z0, top, a, b, rng)?;
    let d = z0.dim();
    let tail = 0.5f64.powi(top as i32);
    let mut outcomes = vec![(tail, ys[0].clone())];
    for i in 1..=top as usize {
        let w = (1u64 << i) as f64;
        let v: Vec<f64> = (0..d).map(|j| ys[0][j] + w * (ys[i][j] - ys[i - 1][j])).collect();
        outcomes.push((0.5f64.powi(i as i32), v));
    }
    let mut mean = vec![0.0; d];
    for (p, v) in &outcomes {
        for (m, x) in mean.iter_mut().zip(v) {
            *m += p * x;
        }
    }
    let variance = outcomes
        .iter()
        .map(|(p, v)| p * v.iter().zip(&mean).map(|(x, m)| (x - m) * (x - m)).sum::<f64>())
        .sum();
    let to_point = |v: Vec<f64>| Point::new(v).map_err(|_| Error::non_finite("MLMC outcome"));
    Ok(MlmcEnumeration {
        checkpoints: ys.into_iter().map(to_point).collect::<Result<_>>()?,
        outcomes: outcomes
            .into_iter()
            .map(|(p, v)| Ok((p, to_point(v)?)))
            .collect::<Result<_>>()?,
        mean: to_point(mean)?,
        variance,
        iterations: steps,
    })
}

/// How [`mlmc_average`] picks MLMC levels.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum LevelSampling {
    /// Random `I ~ Geom(1/2)` per draw.
    Geometric,
    /// Replace each draw by its exact expectation over `I` (test mode).
    Exhaustive,
}

/// Mean of `M` independent MLMC draws. Draw `m` uses the substreams
/// `(seed, outer, m, Level)` and `(seed, outer, m, Noise)`, so the result is
/// independent of thread count.
#[allow(clippy::too_many_arguments)]
pub fn mlmc_average(
    z0: &Point,
    n: u64,
    m: u64,
    a: ScaledProx,
    b: &ShiftedMap,
    seed: u64,
    outer: u64,
    sampling: LevelSampling,
) -> Result<InnerSolveResult> {
    if m == 0 {
        return Err(Error::invalid("M", "need at least one MLMC draw"));
    }
    check_mlmc(z0, n, b)?;
    let d = z0.dim();
    let blocks = m.div_ceil(MLMC_BLOCK);
    let partials: Vec<(Vec<f64>, u64, Vec<u8>)> = (0..blocks)
        .into_par_iter()
        .map(|blk| {
            let lo = blk * MLMC_BLOCK;
            let hi = (lo + MLMC_BLOCK).min(m);
            let mut sum = vec![0.0; d];
            let mut iters = 0u64;
            let mut levels = Vec::with_capacity((hi - lo) as usize);
            let mut st = MlmcState::new(d);
            for draw in lo..hi {
                let mut noise = substream(seed, outer, draw, Lane::Noise)?;
                match sampling {
                    LevelSampling::Geometric => {
                        let level = geometric_level(&mut substream(seed, outer, draw, Lane::Level)?);
                        st.draw(z0.as_slice(), n, level, a, b, &mut noise)?;
                        levels.push(level.min(u8::MAX as u32) as u8);
                        for (s, v) in sum.iter_mut().zip(&st.fbf.z) {
                            *s += v;
                        }
                        iters += st.fbf.steps;
                    }
                    LevelSampling::Exhaustive => {
                        let e = mlmc_enumerate(z0, n, a, b, &mut noise)?;
                        for (s, v) in sum.iter_mut().zip(e.mean.as_slice()) {
                            *s += v;
                        }
                        iters += e.iterations;
                    }
                }
            }
            Ok((sum, iters, levels))
        })
        .collect::<Result<_>>()?;
    let mut total = vec![0.0; d];
    let mut iterations = 0u64;
    let mut levels_drawn = Vec::new();
    for (sum, it, lv) in partials {
        for (t, s) in total.iter_mut().zip(&sum) {
            *t += s;
        }
        iterations += it;
        levels_drawn.extend(lv);
    }
    let inv = 1.0 / m as f64;
    total.iter_mut().for_each(|t| *t *= inv);
    let mut r = InnerSolveResult::plain(total, iterations)?;
    r.levels_drawn = levels_drawn;
    Ok(r)
}
