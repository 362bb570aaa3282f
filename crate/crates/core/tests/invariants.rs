//! Property tests for core-model and verify-metrics invariants.

use std::sync::Arc;

use comono::model::{make_shifted_map, AffineMap, InclusionProblem, OracleCounter, SmoothMap};
use comono::problems::{make_affine, Regularizer};
use comono::rng::{substream, Lane};
use comono::verify::{check_firm_nonexpansive, residual};
use comono::{Matrix, Point};
use proptest::prelude::*;

fn matrix(entries: Vec<f64>, d: usize) -> Matrix {
    Matrix::from_row_major(d, d, entries).unwrap()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn shifted_map_is_strongly_monotone_and_lipschitz(
        entries in prop::collection::vec(-2.0f64..2.0, 9),
        frac in 0.05f64..0.95,
        anchor in prop::collection::vec(-5.0f64..5.0, 3),
        seed in 0u64..1000,
    ) {
        let f = AffineMap::new(matrix(entries, 3), vec![0.1, -0.2, 0.3]).unwrap();
        let eta = frac / f.lipschitz().max(1e-9);
        let b = make_shifted_map(&f, eta, &Point::new(anchor).unwrap()).unwrap();
        let (mu, lb) = (b.mu(), b.lipschitz());
        use rand::Rng;
        let mut r = substream(seed, 0, 0, Lane::Probe).unwrap();
        let (mut bz, mut bw) = ([0.0; 3], [0.0; 3]);
        for _ in 0..1000 {
            let z: Vec<f64> = (0..3).map(|_| r.random_range(-10.0..10.0)).collect();
            let w: Vec<f64> = (0..3).map(|_| r.random_range(-10.0..10.0)).collect();
            b.eval_into(&z, &mut bz);
            b.eval_into(&w, &mut bw);
            let dz: Vec<f64> = z.iter().zip(&w).map(|(a, c)| a - c).collect();
            let db: Vec<f64> = bz.iter().zip(&bw).map(|(a, c)| a - c).collect();
            let n2: f64 = dz.iter().map(|v| v * v).sum();
            let inner: f64 = db.iter().zip(&dz).map(|(a, c)| a * c).sum();
            let nb: f64 = db.iter().map(|v| v * v).sum::<f64>().sqrt();
            prop_assert!(inner >= mu * n2 - 1e-10 * n2);
            prop_assert!(nb <= lb * n2.sqrt() * (1.0 + 1e-10));
        }
    }

    #[test]
    fn residual_moves_at_most_by_tolerance(
        x in prop::collection::vec(-3.0f64..3.0, 2),
        lambda in 0.0f64..1.0,
        tol_exp in 4i32..11,
    ) {
        let m = Matrix::from_rows(&[vec![0.2, 1.0], vec![-1.0, 0.4]]).unwrap();
        let p = make_affine(&m, &[0.3, -0.1], &Regularizer::L1 { lambda }).unwrap();
        let eta = 0.6 / p.lipschitz();
        let x = Point::new(x).unwrap();
        let old = 10f64.powi(-tol_exp);
        let new = old * 1e-2;
        let a = residual(&p, &x, eta, old).unwrap();
        let b = residual(&p, &x, eta, new).unwrap();
        prop_assert!((a - b).abs() <= (old + new) / eta);
    }

    #[test]
    fn point_arithmetic(
        a in prop::collection::vec(-1e3f64..1e3, 1..8),
        s in -10.0f64..10.0,
        t in -10.0f64..10.0,
    ) {
        let x = Point::new(a.clone()).unwrap();
        let y = x.scale(0.5);
        let z = Point::lincomb(s, &x, t, &y);
        for i in 0..a.len() {
            prop_assert!((z[i] - (s + 0.5 * t) * a[i]).abs() <= 1e-12 * (1.0 + a[i].abs()) * 20.0);
        }
        prop_assert!((x.norm_sq() - x.dot(&x)).abs() <= 1e-9 * (1.0 + x.norm_sq()));
        prop_assert_eq!(x.dist(&x), 0.0);
    }

    #[test]
    fn solve_inverts_well_conditioned_systems(
        entries in prop::collection::vec(-1.0f64..1.0, 16),
        rhs in prop::collection::vec(-5.0f64..5.0, 4),
    ) {
        let mut m = matrix(entries, 4);
        for i in 0..4 {
            m[(i, i)] += 5.0;
        }
        let z = m.solve(&rhs).unwrap();
        let back = m.mul_vec(&z);
        for i in 0..4 {
            prop_assert!((back[i] - rhs[i]).abs() <= 1e-12);
        }
    }

    #[test]
    fn l1_box_resolvents_are_firm(lambda in 0.0f64..2.0, step in 0.01f64..3.0, seed in 0u64..100) {
        let g = comono::prox::L1Norm::new(lambda).unwrap();
        let mut r = substream(seed, 0, 0, Lane::Probe).unwrap();
        prop_assert!(check_firm_nonexpansive(&g, 3, step, 200, &mut r, 4.0).unwrap().passed);
    }
}

#[test]
fn oracle_counter_charges_two_calls_per_fbf_iteration() {
    let mut c = OracleCounter::new();
    c.charge_fbf_iterations(7);
    c.charge(3);
    assert_eq!(c.calls(), 17);
    assert_eq!(comono::model::CALLS_PER_FBF_ITERATION, 2);
}

#[test]
fn problem_rejects_rho_beyond_inverse_lipschitz() {
    let f: Arc<dyn SmoothMap> = Arc::new(AffineMap::new(Matrix::identity(2), vec![0.0, 0.0]).unwrap());
    let g = Arc::new(comono::prox::ZeroOperator);
    let bad = InclusionProblem::new(
        "bad",
        f,
        g,
        comono::model::Assumption::Cohypomonotone { rho: 1.5 },
        comono::model::Domain::Unconstrained,
    );
    assert!(bad.is_err());
}
