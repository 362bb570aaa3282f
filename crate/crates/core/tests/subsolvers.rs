//! FBF, stochastic FBF and MLMC estimators on small affine subproblems.

mod common;

use common::{noisy_identity, p1, scalar_map, shifted};
use comono::bounds;
use comono::model::{make_shifted_map, ScaledProx};
use comono::prox::{resolve_affine, ZeroOperator};
use comono::rng::{substream, Lane};
use comono::subsolver::*;
use comono::{Matrix, Point};
use proptest::prelude::*;

fn zero() -> ScaledProx<'static> {
    ScaledProx {
        inner: &ZeroOperator,
        scale: 1.0,
    }
}

fn stream(draw: u64) -> comono::rng::StreamRng {
    substream(99, 0, draw, Lane::Noise).unwrap()
}

#[test]
fn fbf_from_fixed_point_stays() {
    let f = scalar_map(0.0, 0.0);
    let b = make_shifted_map(&f, 0.5, &p1(0.3)).unwrap();
    for n in [0, 1, 7, 100] {
        assert_eq!(fbf_run(&p1(0.3), n, zero(), &b).unwrap().z_out.as_slice(), &[0.3]);
    }
}

#[test]
fn fbf_one_step_and_limit() {
    let f = scalar_map(1.0, 0.0);
    let b = shifted(&f);
    let r = fbf_run(&p1(1.0), 1, zero(), &b).unwrap();
    assert!((r.z_out[0] - 11.0 / 12.0).abs() < 1e-15);
    assert_eq!((r.iterations, r.oracle_calls), (1, 2));
    let z = fbf_run(&p1(1.0), 400, zero(), &b).unwrap().z_out;
    let exact = resolve_affine(&Matrix::identity(1), &[0.0], 0.5, &p1(1.0)).unwrap();
    assert!((z[0] - exact[0]).abs() < 1e-12);
}

#[test]
fn fbf_is_bitwise_deterministic() {
    let f = scalar_map(1.0, 0.2);
    let b = shifted(&f);
    let a = fbf_run(&p1(-3.0), 37, zero(), &b).unwrap();
    let c = fbf_run(&p1(-3.0), 37, zero(), &b).unwrap();
    assert_eq!(a.z_out.as_slice()[0].to_bits(), c.z_out.as_slice()[0].to_bits());
}

#[test]
fn stochastic_schedule_and_noiseless_fixed_point() {
    assert!((stochastic_step(0, 0.5, 1.5) - 2.0 / 9.5).abs() < 1e-15);
    let f = comono::model::NoisyMap::new(std::sync::Arc::new(scalar_map(0.0, 0.0)), 0.0).unwrap();
    let b = make_shifted_map(&f, 0.5, &p1(0.4)).unwrap();
    let r = fbf_stochastic_run(&p1(0.4), 50, zero(), &b, &mut stream(0)).unwrap();
    assert_eq!(r.z_out.as_slice(), &[0.4]);
}

#[test]
fn stochastic_run_is_seed_deterministic_and_needs_sampler() {
    let f = noisy_identity(0.1);
    let b = shifted(&f);
    let a = fbf_stochastic_run(&p1(1.0), 500, zero(), &b, &mut stream(3)).unwrap();
    let c = fbf_stochastic_run(&p1(1.0), 500, zero(), &b, &mut stream(3)).unwrap();
    let d = fbf_stochastic_run(&p1(1.0), 500, zero(), &b, &mut stream(4)).unwrap();
    assert_eq!(a.z_out, c.z_out);
    assert_ne!(a.z_out, d.z_out);
    let plain = scalar_map(1.0, 0.0);
    let err = fbf_stochastic_run(&p1(1.0), 5, zero(), &shifted(&plain), &mut stream(0)).unwrap_err();
    assert!(matches!(err, comono::Error::MissingSampler));
}

#[test]
fn mlmc_levels() {
    assert_eq!(max_level(2), 1);
    assert_eq!(max_level(4), 2);
    assert_eq!(max_level(5), 2);
    assert_eq!(max_level(1 << 20), 20);
    let mut r = stream(7);
    let n = 100_000;
    let ones = (0..n).filter(|_| geometric_level(&mut r) == 1).count();
    assert!((ones as f64 / n as f64 - 0.5).abs() < 0.01);
}

#[test]
fn mlmc_n4_enumeration() {
    let f = noisy_identity(0.0);
    let b = shifted(&f);
    let e = mlmc_enumerate(&p1(1.0), 4, zero(), &b, &mut stream(0)).unwrap();
    let probs: Vec<f64> = e.outcomes.iter().map(|(p, _)| *p).collect();
    assert_eq!(probs, vec![0.25, 0.5, 0.25]);
    let y = &e.checkpoints;
    assert!((e.outcomes[1].1[0] - (y[0][0] + 2.0 * (y[1][0] - y[0][0]))).abs() < 1e-15);
    assert!((e.outcomes[2].1[0] - (y[0][0] + 4.0 * (y[2][0] - y[1][0]))).abs() < 1e-15);
    assert!((e.mean[0] - y[2][0]).abs() < 1e-12);
}

#[test]
fn mlmc_variance_identity() {
    // Var = Σ 2^i‖y^i − y^{i−1}‖² − ‖y^{i_N} − y^0‖² for a noiseless sampler.
    let f = noisy_identity(0.0);
    let b = shifted(&f);
    for n in [2u64, 5, 64, 1000] {
        let e = mlmc_enumerate(&p1(1.0), n, zero(), &b, &mut stream(0)).unwrap();
        let y = &e.checkpoints;
        let top = y.len() - 1;
        let s: f64 = (1..=top)
            .map(|i| (1u64 << i) as f64 * y[i].dist(&y[i - 1]).powi(2))
            .sum();
        let expected = s - y[top].dist(&y[0]).powi(2);
        assert!(
            (e.variance - expected).abs() <= 1e-12 * (1.0 + expected.abs()),
            "N = {n}"
        );
    }
}

#[test]
fn mlmc_fallback_and_small_n() {
    let f = noisy_identity(0.1);
    let b = shifted(&f);
    let out = mlmc_fbf_at_level(&p1(1.0), 4, 3, zero(), &b, &mut stream(1)).unwrap();
    let one = fbf_stochastic_run(&p1(1.0), 1, zero(), &b, &mut stream(1)).unwrap();
    assert_eq!(out.z_out, one.z_out);
    assert_eq!(out.oracle_calls, 2);
    assert!(mlmc_fbf(&p1(1.0), 1, zero(), &b, &mut stream(0)).is_err());
    assert!(mlmc_average(&p1(1.0), 4, 0, zero(), &b, 0, 0, LevelSampling::Geometric).is_err());
}

#[test]
fn mlmc_average_exhaustive_matches_enumeration() {
    let f = noisy_identity(0.0);
    let b = shifted(&f);
    let e = mlmc_enumerate(&p1(1.0), 64, zero(), &b, &mut stream(0)).unwrap();
    for m in [1, 3, 2000] {
        let avg = mlmc_average(&p1(1.0), 64, m, zero(), &b, 5, 0, LevelSampling::Exhaustive).unwrap();
        assert!((avg.z_out[0] - e.mean[0]).abs() < 1e-12);
    }
}

#[test]
fn mlmc_average_is_deterministic() {
    let f = noisy_identity(0.1);
    let b = shifted(&f);
    let a = mlmc_average(&p1(1.0), 64, 3000, zero(), &b, 8, 2, LevelSampling::Geometric).unwrap();
    let c = mlmc_average(&p1(1.0), 64, 3000, zero(), &b, 8, 2, LevelSampling::Geometric).unwrap();
    assert_eq!(a.z_out, c.z_out);
    assert_eq!(a.oracle_calls, c.oracle_calls);
}

#[test]
fn mlmc_average_near_solution() {
    let f = noisy_identity(0.1);
    let b = shifted(&f);
    let m = 10_000u64;
    let avg = mlmc_average(&p1(1.0), 64, m, zero(), &b, 21, 0, LevelSampling::Geometric).unwrap();
    let (mu, lb) = (b.mu(), b.lipschitz());
    let bias = bounds::mlmc_bias_sq(1.0 / 3.0, 0.25 * 0.01, mu, lb, 64).sqrt();
    let sd = (bounds::mlmc_second_moment(1.0 / 3.0, 0.25 * 0.01, mu, lb, 64) / m as f64).sqrt();
    assert!((avg.z_out[0] - 2.0 / 3.0).abs() <= bias + 3.0 * sd);
}

proptest! {
    #[test]
    fn fbf_contracts_on_monotone_affine(
        r in 0.0f64..1.0, phi in -1.57f64..1.57, eta in 0.143f64..0.95,
        xb in prop::collection::vec(-5.0f64..5.0, 2), z0 in prop::collection::vec(-5.0f64..5.0, 2),
    ) {
        // Monotone M with ‖M‖ = r ≤ 1, declared L = 1 so that μ/L_B ≤ 3/4.
        let (a, s) = (r * phi.cos(), r * phi.sin());
        let m = Matrix::from_rows(&[vec![a, -s], vec![s, a]]).unwrap();
        let f = comono::model::AffineMap::with_lipschitz(m.clone(), vec![0.0, 0.0], 1.0).unwrap();
        let xb = Point::new(xb).unwrap();
        let b = make_shifted_map(&f, eta, &xb).unwrap();
        let zs = resolve_affine(&m, &[0.0, 0.0], eta, &xb).unwrap();
        let q = bounds::fbf_contraction(b.mu(), b.lipschitz());
        let mut z = Point::new(z0).unwrap();
        for _ in 0..100 {
            let next = fbf_run(&z, 1, zero(), &b).unwrap().z_out;
            let (d0, d1) = (z.dist(&zs).powi(2), next.dist(&zs).powi(2));
            prop_assert!(d1 <= q * d0 * (1.0 + 1e-10) + 1e-28);
            z = next;
        }
    }

    #[test]
    fn enumeration_probabilities_sum_to_one(n in 2u64..5000) {
        let f = noisy_identity(0.0);
        let b = shifted(&f);
        let e = mlmc_enumerate(&p1(1.0), n, zero(), &b, &mut stream(0)).unwrap();
        let total: f64 = e.outcomes.iter().map(|(p, _)| p).sum();
        prop_assert!((total - 1.0).abs() < 1e-15);
        prop_assert_eq!(e.checkpoints.len() as u32, max_level(n) + 1);
        prop_assert!((e.mean[0] - e.checkpoints.last().unwrap()[0]).abs() < 1e-12);
    }
}
