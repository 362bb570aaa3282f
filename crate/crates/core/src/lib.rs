//! Inexact Halpern and Krasnosel'skii–Mann solvers for structured nonmonotone
//! inclusions `0 ∈ F(x) + G(x)`, with forward-backward-forward inner solvers,
//! stochastic and multilevel Monte Carlo variants, test-problem factories and
//! operator-property verification.
//!
//! ```
//! use comono::{outer, problems};
//!
//! let p = problems::make_rotation(&problems::RotationSpec::new(1.0, 0.75 * std::f64::consts::PI, 2)).unwrap();
//! let params = outer::OuterParams::new(0.85, p.assumption.rho(), 20);
//! let x0 = comono::Point::new(vec![1.0, 0.0]).unwrap();
//! let report = outer::halpern_solve(&p, &params, &x0).unwrap();
//! assert_eq!(report.rows.len(), 20);
//! ```

pub mod bench;
pub mod bounds;
pub mod error;
pub mod linalg;
pub mod model;
pub mod outer;
pub mod point;
pub mod problems;
pub mod prox;
pub mod rng;
pub mod subsolver;
pub mod verify;

pub use error::{Error, Result};
pub use linalg::Matrix;
pub use model::{InclusionProblem, ProxOperator, SmoothMap, SolveReport};
pub use point::Point;
