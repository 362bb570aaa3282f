//! Problem factories.

mod common;

use std::f64::consts::PI;

use common::{rotation, ETA};
use comono::model::{Assumption, Domain};
use comono::outer::{km_solve, OuterParams};
use comono::problems::*;
use comono::rng::{substream, Lane};
use comono::verify::{check_cohypomonotone, check_lipschitz, check_weak_mvi, residual, MviSampling, PairSampling};
use comono::{Matrix, Point};
use rand::Rng;

/// Largest eigenvalue of a symmetric 3×3 matrix by the trigonometric
/// closed form of the characteristic cubic.
fn largest_eigenvalue_sym3(a: [[f64; 3]; 3]) -> f64 {
    let p1 = a[0][1].powi(2) + a[0][2].powi(2) + a[1][2].powi(2);
    let q = (a[0][0] + a[1][1] + a[2][2]) / 3.0;
    let p2 = (a[0][0] - q).powi(2) + (a[1][1] - q).powi(2) + (a[2][2] - q).powi(2) + 2.0 * p1;
    let p = (p2 / 6.0).sqrt();
    if p == 0.0 {
        return q;
    }
    let mut b = [[0.0; 3]; 3];
    for i in 0..3 {
        for j in 0..3 {
            b[i][j] = (a[i][j] - if i == j { q } else { 0.0 }) / p;
        }
    }
    let det = b[0][0] * (b[1][1] * b[2][2] - b[1][2] * b[2][1]) - b[0][1] * (b[1][0] * b[2][2] - b[1][2] * b[2][0])
        + b[0][2] * (b[1][0] * b[2][1] - b[1][1] * b[2][0]);
    let phi = (det / 2.0).clamp(-1.0, 1.0).acos() / 3.0;
    q + 2.0 * p * phi.cos()
}

#[test]
fn rotation_family() {
    let p = rotation();
    assert!((p.assumption.rho() - 0.5f64.sqrt()).abs() < 1e-15);
    assert!(p.assumption.rho() > 0.5 / p.lipschitz());
    let near = make_rotation(&RotationSpec::new(1.0, PI / 2.0 + 0.01, 2)).unwrap();
    assert!((near.assumption.rho() - 0.01).abs() < 1e-6);
    let mut r = substream(1, 0, 0, Lane::Probe).unwrap();
    for _ in 0..100 {
        let x = Point::new(vec![r.random_range(-3.0..3.0), r.random_range(-3.0..3.0)]).unwrap();
        let y = Point::new(vec![r.random_range(-3.0..3.0), r.random_range(-3.0..3.0)]).unwrap();
        let d = p.f.eval(&x).unwrap().dist(&p.f.eval(&y).unwrap());
        assert!((d - x.dist(&y)).abs() <= 1e-14 * (1.0 + x.dist(&y)));
    }
}

#[test]
fn rotation_rho_is_sharp() {
    let p = rotation();
    let rho = p.assumption.rho();
    let s = PairSampling::default();
    let mut r = substream(2, 0, 0, Lane::Probe).unwrap();
    assert!(check_cohypomonotone(&p, rho, 10_000, &mut r, &s).unwrap().passed);
    let mut r = substream(2, 0, 1, Lane::Probe).unwrap();
    let tight = check_cohypomonotone(&p, 0.9 * rho, 10, &mut r, &s).unwrap();
    assert!(!tight.passed && tight.worst_violation > 0.05);
}

#[test]
fn factory_lipschitz_constants_hold() {
    let a = Matrix::from_rows(&[vec![1.0, -1.0, 0.3], vec![-1.0, 1.0, 0.2]]).unwrap();
    let problems = [
        rotation(),
        make_rotation(&RotationSpec::new(2.5, 2.0, 6)).unwrap(),
        make_matrix_game(&a, None).unwrap(),
        make_ratio_game(&RatioGameSpec::shipped()).unwrap(),
        make_affine(
            &Matrix::from_rows(&[vec![0.0, 2.0], vec![-2.0, 0.1]]).unwrap(),
            &[1.0, 0.0],
            &Regularizer::None,
        )
        .unwrap(),
    ];
    for (i, p) in problems.iter().enumerate() {
        let mut r = substream(3, 0, i as u64, Lane::Probe).unwrap();
        let rep = check_lipschitz(p, 1000, &mut r, &PairSampling::default()).unwrap();
        assert!(rep.passed, "{}: {rep:?}", p.label);
    }
}

#[test]
fn matching_pennies() {
    let a = Matrix::from_rows(&[vec![1.0, -1.0], vec![-1.0, 1.0]]).unwrap();
    let p = make_matrix_game(&a, Some(Point::new(vec![0.5; 4]).unwrap())).unwrap();
    assert_eq!(p.assumption, Assumption::Monotone);
    assert_eq!(p.domain, Domain::Simplices { blocks: vec![2, 2] });
    assert!((p.lipschitz() - 2.0).abs() < 1e-9);
    let eta = 0.5 / p.lipschitz();
    assert!(residual(&p, p.known_solution.as_ref().unwrap(), eta, 1e-12).unwrap() <= 1e-9);
}

#[test]
fn zero_game_every_feasible_point_solves() {
    let p = make_matrix_game(&Matrix::zeros(2, 3), None).unwrap();
    let mut r = substream(4, 0, 0, Lane::Probe).unwrap();
    for _ in 0..20 {
        let mut v: Vec<f64> = (0..5).map(|_| r.random_range(0.01..1.0)).collect();
        let (s1, s2) = (v[0] + v[1], v[2] + v[3] + v[4]);
        v[..2].iter_mut().for_each(|x| *x /= s1);
        v[2..].iter_mut().for_each(|x| *x /= s2);
        assert!(residual(&p, &Point::new(v).unwrap(), 1.0, 1e-12).unwrap() <= 1e-12);
    }
}

#[test]
fn matrix_game_lipschitz_matches_independent_svd() {
    let mut r = substream(5, 0, 0, Lane::Probe).unwrap();
    for _ in 0..20 {
        let rows: Vec<Vec<f64>> = (0..3)
            .map(|_| (0..3).map(|_| r.random_range(-2.0..2.0)).collect())
            .collect();
        let a = Matrix::from_rows(&rows).unwrap();
        let mut ata = [[0.0; 3]; 3];
        for i in 0..3 {
            for j in 0..3 {
                ata[i][j] = (0..3).map(|k| rows[k][i] * rows[k][j]).sum();
            }
        }
        let sigma = largest_eigenvalue_sym3(ata).sqrt();
        let p = make_matrix_game(&a, None).unwrap();
        assert!(
            (p.lipschitz() - sigma).abs() <= 1e-8 * sigma.max(1.0),
            "{} vs {sigma}",
            p.lipschitz()
        );
    }
}

#[test]
fn constant_ratio_games_have_zero_residual() {
    let one = Matrix::from_rows(&[vec![0.7]]).unwrap();
    let s = Matrix::from_rows(&[vec![1.3]]).unwrap();
    let mut spec = RatioGameSpec::new(one, s);
    spec.lipschitz = Some(1.0);
    spec.rho = Some(0.0);
    spec.solution = Some(Point::new(vec![1.0, 1.0]).unwrap());
    let p = make_ratio_game(&spec).unwrap();
    assert!(residual(&p, &Point::new(vec![1.0, 1.0]).unwrap(), 0.5, 1e-12).unwrap() <= 1e-12);

    let r = Matrix::from_rows(&[vec![1.0, 2.0], vec![0.5, 3.0]]).unwrap();
    let mut spec = RatioGameSpec::new(r.clone(), r);
    spec.lipschitz = Some(1.0);
    spec.rho = Some(0.0);
    spec.solution = Some(Point::new(vec![0.5; 4]).unwrap());
    let p = make_ratio_game(&spec).unwrap();
    let mut rng = substream(6, 0, 0, Lane::Probe).unwrap();
    for _ in 0..20 {
        let a: f64 = rng.random_range(0.0..1.0);
        let b: f64 = rng.random_range(0.0..1.0);
        let x = Point::new(vec![a, 1.0 - a, b, 1.0 - b]).unwrap();
        assert!(p.f.eval(&x).unwrap().norm() <= 1e-14);
        assert!(residual(&p, &x, 0.5, 1e-12).unwrap() <= 1e-11);
    }
}

#[test]
fn shipped_ratio_game_fixture() {
    let p = make_ratio_game(&RatioGameSpec::shipped()).unwrap();
    assert_eq!(
        p.assumption,
        Assumption::WeakMvi {
            rho: shipped_ratio::RHO
        }
    );
    assert_eq!(p.lipschitz(), shipped_ratio::LIPSCHITZ);
    let xs = p.known_solution.clone().unwrap();
    assert!(p.f.eval(&xs).unwrap().norm() <= 1e-12);
    // A long KM run lands on the stored equilibrium.
    let eta = 0.2;
    let r = km_solve(
        &p,
        &OuterParams::new(eta, shipped_ratio::RHO, 3000),
        &Point::new(vec![0.5; 4]).unwrap(),
    )
    .unwrap();
    assert!(r.final_iterate.dist(&xs) <= 1e-6, "{:?}", r.final_iterate);
    // Same sample set the estimate was taken over.
    let mut rng = substream(RATIO_ESTIMATION_SEED, 0, 1, Lane::Probe).unwrap();
    let rep = check_weak_mvi(
        &p,
        &r.final_iterate,
        shipped_ratio::RHO * (1.0 + 1e-3),
        10_000,
        &mut rng,
        MviSampling::default(),
    )
    .unwrap();
    assert!(rep.passed, "{rep:?}");
}

#[test]
fn ratio_game_estimation_reproduces_fixture() {
    let shipped = RatioGameSpec::shipped();
    let mut spec = RatioGameSpec::new(shipped.r.clone(), shipped.s.clone());
    spec.solution = shipped.solution.clone();
    let p = make_ratio_game(&spec).unwrap();
    assert!((p.lipschitz() - shipped_ratio::LIPSCHITZ).abs() <= 1e-12);
    assert!((p.assumption.rho() - shipped_ratio::RHO).abs() <= 1e-12);
}

#[test]
fn affine_examples() {
    let skew = Matrix::from_rows(&[vec![0.0, 3.0], vec![-3.0, 0.0]]).unwrap();
    let p = make_affine(&skew, &[0.0, 0.0], &Regularizer::None).unwrap();
    assert_eq!(p.assumption, Assumption::Monotone);
    assert_eq!(p.known_solution, Some(Point::zeros(2)));
    let p = make_affine(&Matrix::identity(1), &[-1.0], &Regularizer::None).unwrap();
    assert_eq!(p.known_solution.unwrap().as_slice(), &[1.0]);
    let p = make_affine(&Matrix::identity(1), &[0.0], &Regularizer::L1 { lambda: 0.5 }).unwrap();
    assert!(p.known_solution.is_none());
    assert!(residual(&p, &Point::zeros(1), ETA, 1e-12).unwrap() <= 1e-12);
    let boxed = Regularizer::Box {
        lower: vec![1.0],
        upper: vec![2.0],
    };
    let p = make_affine(&Matrix::identity(1), &[0.0], &boxed).unwrap();
    assert!(residual(&p, &Point::new(vec![1.0]).unwrap(), 0.5, 1e-12).unwrap() <= 1e-11);
}
