#![allow(dead_code)]

use std::f64::consts::PI;
use std::sync::Arc;

use comono::model::{make_shifted_map, AffineMap, NoisyMap, ShiftedMap, SmoothMap};
use comono::problems::{make_rotation, RotationSpec};
use comono::{InclusionProblem, Matrix, Point};

pub const ETA: f64 = 0.85;
pub const THETA: f64 = 0.75 * PI;

/// `θ = 3π/4`, `L = 1`, `d = 2`.
pub fn rotation() -> InclusionProblem {
    make_rotation(&RotationSpec::new(1.0, THETA, 2)).unwrap()
}

pub fn e1() -> Point {
    Point::unit(2, 0)
}

/// 1-D `F(x) = m·x + b`.
pub fn scalar_map(m: f64, b: f64) -> AffineMap {
    AffineMap::new(Matrix::from_rows(&[vec![m]]).unwrap(), vec![b]).unwrap()
}

/// `F = Id` in 1-D with Gaussian noise of variance `σ²`.
pub fn noisy_identity(sigma: f64) -> NoisyMap {
    NoisyMap::new(Arc::new(scalar_map(1.0, 0.0)), sigma).unwrap()
}

/// `B(z) = 1.5z − 1`: `F = Id`, `η = 0.5`, `x̄ = 1`, solution `2/3`.
pub fn shifted<'a>(f: &'a dyn SmoothMap) -> ShiftedMap<'a> {
    make_shifted_map(f, 0.5, &Point::new(vec![1.0]).unwrap()).unwrap()
}

pub fn p1(v: f64) -> Point {
    Point::new(vec![v]).unwrap()
}

pub fn close(a: f64, b: f64, tol: f64) -> bool {
    (a - b).abs() <= tol
}
