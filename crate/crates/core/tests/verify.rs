//! Reference residuals, certificates and operator-property checks.

mod common;

use common::{e1, rotation, ETA};
use comono::linalg::Matrix;
use comono::problems::{make_affine, make_matrix_game, make_ratio_game, RatioGameSpec, Regularizer};
use comono::rng::{substream, Lane};
use comono::verify::*;
use comono::Point;

fn rho() -> f64 {
    rotation().assumption.rho()
}

fn rng(i: u64) -> comono::rng::StreamRng {
    substream(31, 0, i, Lane::Probe).unwrap()
}

#[test]
fn residual_at_solution_and_closed_form() {
    let p = rotation();
    assert!(residual(&p, &Point::zeros(2), ETA, 1e-12).unwrap() <= 1e-12 / ETA);
    let (s, c) = common::THETA.sin_cos();
    let (a, b) = (1.0 + ETA * c, ETA * s);
    let det = a * a + b * b;
    let j = [a / det, -b / det];
    let expected = ((1.0 - j[0]).powi(2) + j[1].powi(2)).sqrt() / ETA;
    assert!((residual(&p, &e1(), ETA, 1e-12).unwrap() - expected).abs() < 1e-14);
}

#[test]
fn residual_rejects_large_step() {
    assert!(residual(&rotation(), &e1(), 1.0, 1e-12).is_err());
}

#[test]
fn residual_is_stable_in_tolerance() {
    let a = Matrix::from_rows(&[vec![1.0, -1.0], vec![-1.0, 1.0]]).unwrap();
    let p = make_matrix_game(&a, None).unwrap();
    let eta = 0.2;
    let x = Point::new(vec![1.0, 0.0, 0.2, 0.8]).unwrap();
    let coarse = residual(&p, &x, eta, 1e-6).unwrap();
    let fine = residual(&p, &x, eta, 1e-12).unwrap();
    assert!(fine > 0.0);
    assert!((coarse - fine).abs() <= (1e-6 + 1e-12) / eta);
}

#[test]
fn certificate_examples() {
    let p = make_affine(&Matrix::identity(1), &[-1.0], &Regularizer::None).unwrap();
    let c = extract_certificate(&p, &Point::zeros(1), 0.5, 1e-12).unwrap();
    assert!((c.point[0] - 1.0 / 3.0).abs() < 1e-15);
    assert!((c.bound - 2.0 / 3.0).abs() < 1e-11);
    assert!((c.operator_norm.unwrap() - 2.0 / 3.0).abs() < 1e-15);
    let at_solution = extract_certificate(&p, &Point::new(vec![1.0]).unwrap(), 0.5, 1e-12).unwrap();
    assert!(at_solution.bound <= 2e-12 / 0.5);
    let rot = rotation();
    let mut x = e1();
    for _ in 0..20 {
        let c = extract_certificate(&rot, &x, ETA, 1e-12).unwrap();
        assert!(c.operator_norm.unwrap() <= c.bound * (1.0 + 1e-8));
        x = c.point;
    }
    let game = make_matrix_game(&Matrix::identity(2), None).unwrap();
    assert!(
        extract_certificate(&game, &Point::new(vec![1.0, 0.0, 1.0, 0.0]).unwrap(), 0.5, 1e-12)
            .unwrap()
            .operator_norm
            .is_none()
    );
}

#[test]
fn rotation_properties_are_sharp() {
    let p = rotation();
    let s = PairSampling::default();
    let rho = rho();
    assert!(
        check_conic_nonexpansive(&p, ETA, rho, 10_000, &mut rng(0), &s)
            .unwrap()
            .passed
    );
    assert!(
        check_cocoercive_identity_minus_j(&p, ETA, rho, 10_000, &mut rng(1), &s)
            .unwrap()
            .passed
    );
    for claimed in [0.9 * rho, 0.5] {
        let conic = check_conic_nonexpansive(&p, ETA, claimed, 10_000, &mut rng(2), &s).unwrap();
        assert!(!conic.passed, "{claimed}");
        let coco = check_cocoercive_identity_minus_j(&p, ETA, claimed, 10_000, &mut rng(3), &s).unwrap();
        assert!(!coco.passed, "{claimed}");
    }
}

#[test]
fn monotone_affine_properties() {
    let m = Matrix::from_rows(&[vec![0.3, 1.0], vec![-1.0, 0.2]]).unwrap();
    let p = make_affine(&m, &[1.0, -0.5], &Regularizer::L1 { lambda: 0.3 }).unwrap();
    let eta = 0.5 / p.lipschitz();
    let reports = property_suite(&p, eta, 0.0, 2000, 3).unwrap();
    assert!(reports.iter().all(|r| r.passed), "{reports:?}");
    let names: Vec<&str> = reports.iter().map(|r| r.name.as_str()).collect();
    assert!(names.contains(&"cocoercive_identity_minus_resolvent"));
}

#[test]
fn suites_pass_on_fixtures() {
    let a = Matrix::from_rows(&[vec![1.0, -1.0], vec![-1.0, 1.0]]).unwrap();
    let pennies = make_matrix_game(&a, Some(Point::new(vec![0.5; 4]).unwrap())).unwrap();
    let ratio = make_ratio_game(&RatioGameSpec::shipped()).unwrap();
    for (p, eta) in [(rotation(), ETA), (pennies, 0.25), (ratio, 0.2)] {
        let rho = p.assumption.rho();
        let reports = property_suite(&p, eta, rho, 2000, 9).unwrap();
        for r in &reports {
            assert!(r.passed, "{}: {r:?}", p.label);
            assert_eq!(r.passed, r.worst_violation <= r.tolerance);
        }
    }
}

#[test]
fn shifted_map_constants() {
    let p = rotation();
    let [mono, lip] = check_shifted_map(&p, ETA, 1000, &mut rng(4), &PairSampling::default()).unwrap();
    assert!(mono.passed && lip.passed);
}

#[test]
fn weak_mvi_estimates() {
    let p = rotation();
    let rho = estimate_weak_mvi_rho(&p, &Point::zeros(2), 20_000, &mut rng(5), MviSampling::default()).unwrap();
    assert!((rho - 0.5f64.sqrt()).abs() < 1e-3);
    let skew = Matrix::from_rows(&[vec![0.0, 1.0], vec![-1.0, 0.0]]).unwrap();
    let q = make_affine(&skew, &[0.0, 0.0], &Regularizer::None).unwrap();
    let r0 = estimate_weak_mvi_rho(&q, &Point::zeros(2), 5_000, &mut rng(6), MviSampling::default()).unwrap();
    assert!(r0 <= 1e-6);
}
