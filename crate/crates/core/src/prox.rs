//! Resolvents of the nonsmooth parts used by the test problems, and the
//! direct affine resolvent used as a reference.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::Matrix;
use crate::model::ProxOperator;
use crate::point::Point;

/// Axis-aligned box `{x : lower ≤ x ≤ upper}`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BoxSet {
    lower: Vec<f64>,
    upper: Vec<f64>,
}

impl BoxSet {
    pub fn new(lower: Vec<f64>, upper: Vec<f64>) -> Result<Self> {
        if lower.len() != upper.len() {
            return Err(Error::DimensionMismatch {
                expected: lower.len(),
                found: upper.len(),
            });
        }
        if lower.is_empty() {
            return Err(Error::invalid("box", "dimension must be at least 1"));
        }
        if lower.iter().chain(&upper).any(|v| v.is_nan()) {
            return Err(Error::non_finite("box bounds"));
        }
        if lower.iter().zip(&upper).any(|(l, u)| l > u) {
            return Err(Error::invalid("box", "lower bound exceeds upper bound"));
        }
        Ok(BoxSet { lower, upper })
    }

    pub fn lower(&self) -> &[f64] {
        &self.lower
    }

    pub fn upper(&self) -> &[f64] {
        &self.upper
    }
}

impl ProxOperator for BoxSet {
    fn dim(&self) -> Option<usize> {
        Some(self.lower.len())
    }

    fn resolve_into(&self, _step: f64, x: &[f64], out: &mut [f64]) {
        for (((o, xi), l), u) in out.iter_mut().zip(x).zip(&self.lower).zip(&self.upper) {
            *o = xi.clamp(*l, *u);
        }
    }
}

pub fn project_box(b: &BoxSet, x: &Point) -> Result<Point> {
    b.resolve(1.0, x)
}

/// Standard simplex `Δ^d`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct SimplexSet {
    dim: usize,
}

impl SimplexSet {
    pub fn new(dim: usize) -> Result<Self> {
        if dim == 0 {
            return Err(Error::invalid("simplex", "dimension must be at least 1"));
        }
        Ok(SimplexSet { dim })
    }
}

impl ProxOperator for SimplexSet {
    fn dim(&self) -> Option<usize> {
        Some(self.dim)
    }

    fn resolve_into(&self, _step: f64, x: &[f64], out: &mut [f64]) {
        project_simplex_into(x, out);
    }
}

/// Euclidean projection onto the standard simplex by sorting and
/// thresholding.
pub fn project_simplex_into(x: &[f64], out: &mut [f64]) {
    let mut sorted = x.to_vec();
    sorted.sort_unstable_by(|a, b| b.total_cmp(a));
    let mut cumsum = 0.0;
    let mut theta = 0.0;
    for (j, v) in sorted.iter().enumerate() {
        cumsum += v;
        let t = (cumsum - 1.0) / (j + 1) as f64;
        if v - t > 0.0 {
            theta = t;
        }
    }
    for (o, xi) in out.iter_mut().zip(x) {
        *o = (xi - theta).max(0.0);
    }
}

pub fn project_simplex(s: &SimplexSet, x: &Point) -> Result<Point> {
    s.resolve(1.0, x)
}

/// Product of simplices `Δ^{d_1} × … × Δ^{d_m}` over consecutive blocks.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct SimplexProduct {
    blocks: Vec<usize>,
}

impl SimplexProduct {
    pub fn new(blocks: Vec<usize>) -> Result<Self> {
        if blocks.is_empty() || blocks.contains(&0) {
            return Err(Error::invalid(
                "simplex product",
                "blocks must be nonempty and positive",
            ));
        }
        Ok(SimplexProduct { blocks })
    }

    pub fn blocks(&self) -> &[usize] {
        &self.blocks
    }
}

impl ProxOperator for SimplexProduct {
    fn dim(&self) -> Option<usize> {
        Some(self.blocks.iter().sum())
    }

    fn resolve_into(&self, _step: f64, x: &[f64], out: &mut [f64]) {
        let mut start = 0;
        for &len in &self.blocks {
            project_simplex_into(&x[start..start + len], &mut out[start..start + len]);
            start += len;
        }
    }
}

/// `G = ∂(λ‖·‖₁)`; its resolvent at step `γ` is soft thresholding by `λγ`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct L1Norm {
    lambda: f64,
}

impl L1Norm {
    pub fn new(lambda: f64) -> Result<Self> {
        if !(lambda >= 0.0 && lambda.is_finite()) {
            return Err(Error::invalid(
                "lambda",
                format!("{lambda} must be finite and nonnegative"),
            ));
        }
        Ok(L1Norm { lambda })
    }

    pub fn lambda(&self) -> f64 {
        self.lambda
    }
}

impl ProxOperator for L1Norm {
    fn dim(&self) -> Option<usize> {
        None
    }

    fn resolve_into(&self, step: f64, x: &[f64], out: &mut [f64]) {
        soft_threshold_into(self.lambda * step, x, out);
    }

    fn is_zero(&self) -> bool {
        self.lambda == 0.0
    }
}

#[inline]
pub fn soft_threshold_into(t: f64, x: &[f64], out: &mut [f64]) {
    for (o, xi) in out.iter_mut().zip(x) {
        *o = xi.signum() * (xi.abs() - t).max(0.0);
    }
}

/// Componentwise `sign(x_i)·max(|x_i| − t, 0)`.
pub fn soft_threshold(t: f64, x: &Point) -> Result<Point> {
    if !(t >= 0.0 && t.is_finite()) {
        return Err(Error::invalid(
            "threshold",
            format!("{t} must be finite and nonnegative"),
        ));
    }
    let mut out = vec![0.0; x.dim()];
    soft_threshold_into(t, x.as_slice(), &mut out);
    Ok(Point::from_vec(out))
}

/// `G ≡ 0`.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct ZeroOperator;

impl ProxOperator for ZeroOperator {
    fn dim(&self) -> Option<usize> {
        None
    }

    fn resolve_into(&self, _step: f64, x: &[f64], out: &mut [f64]) {
        out.copy_from_slice(x);
    }

    fn is_zero(&self) -> bool {
        true
    }
}

/// The unique `z` with `z + η(Mz + b) = x̄`, by a partial-pivot direct solve.
pub fn resolve_affine(m: &Matrix, b: &[f64], eta: f64, x_bar: &Point) -> Result<Point> {
    let d = x_bar.dim();
    if m.rows() != d || m.cols() != d {
        return Err(Error::DimensionMismatch {
            expected: d,
            found: m.rows(),
        });
    }
    if b.len() != d {
        return Err(Error::DimensionMismatch {
            expected: d,
            found: b.len(),
        });
    }
    let mut system = m.scaled(eta);
    for i in 0..d {
        system[(i, i)] += 1.0;
    }
    let rhs: Vec<f64> = x_bar.as_slice().iter().zip(b).map(|(x, bi)| x - eta * bi).collect();
    let z = system.solve(&rhs)?;
    Point::new(z).map_err(|_| Error::non_finite("affine resolvent"))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn p(v: &[f64]) -> Point {
        Point::new(v.to_vec()).unwrap()
    }

    #[test]
    fn box_examples() {
        let b = BoxSet::new(vec![-1.0; 2], vec![1.0; 2]).unwrap();
        assert_eq!(project_box(&b, &p(&[0.3, -0.2])).unwrap(), p(&[0.3, -0.2]));
        assert_eq!(project_box(&b, &p(&[2.0, -3.0])).unwrap(), p(&[1.0, -1.0]));
        let degenerate = BoxSet::new(vec![0.0], vec![0.0]).unwrap();
        assert_eq!(project_box(&degenerate, &p(&[5.0])).unwrap(), p(&[0.0]));
        assert!(project_box(&b, &p(&[1.0])).is_err());
        assert!(BoxSet::new(vec![1.0], vec![0.0]).is_err());
    }

    #[test]
    fn simplex_examples() {
        let s2 = SimplexSet::new(2).unwrap();
        assert_eq!(project_simplex(&s2, &p(&[0.5, 0.5])).unwrap(), p(&[0.5, 0.5]));
        assert_eq!(project_simplex(&s2, &p(&[2.0, 0.0])).unwrap(), p(&[1.0, 0.0]));
        let s3 = SimplexSet::new(3).unwrap();
        let y = project_simplex(&s3, &p(&[0.9, 0.8, -1.0])).unwrap();
        assert!((y[0] - 0.55).abs() < 1e-15 && (y[1] - 0.45).abs() < 1e-15 && y[2] == 0.0);
    }

    #[test]
    fn soft_threshold_examples() {
        assert_eq!(soft_threshold(0.0, &p(&[2.0, -0.5])).unwrap(), p(&[2.0, -0.5]));
        assert_eq!(soft_threshold(1.0, &p(&[2.0, -0.5])).unwrap(), p(&[1.0, 0.0]));
        assert_eq!(soft_threshold(0.25, &p(&[0.25])).unwrap(), p(&[0.0]));
        assert!(soft_threshold(-1.0, &p(&[0.25])).is_err());
    }

    #[test]
    fn affine_resolvent_examples() {
        let z = resolve_affine(&Matrix::identity(1), &[0.0], 0.5, &p(&[1.0])).unwrap();
        assert!((z[0] - 2.0 / 3.0).abs() < 1e-15);
        let x = p(&[0.3, -4.0]);
        assert_eq!(resolve_affine(&Matrix::zeros(2, 2), &[0.0, 0.0], 7.0, &x).unwrap(), x);
        let singular = Matrix::from_rows(&[vec![-2.0]]).unwrap();
        assert!(matches!(
            resolve_affine(&singular, &[0.0], 0.5, &p(&[1.0])),
            Err(Error::SingularSystem { .. })
        ));
    }
}
