//! Dense real vectors and the estimation problem they live in.
//!
//! A [`Point`] is a finite vector in `R^p`; it carries observations `X`,
//! true means `delta`, shrinkage targets `delta0`, and the differences
//! between them. The dimension is always inferred from the vector length,
//! never passed alongside it.

use serde::{Deserialize, Serialize};

use crate::error::{check_same_len, Error, Result};
use crate::sum::CompensatedSum;

/// A point of `R^p`, `p >= 1`, with all coordinates finite.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "Vec<f64>", into = "Vec<f64>")]
pub struct Point {
    coords: Vec<f64>,
}

impl TryFrom<Vec<f64>> for Point {
    type Error = Error;
    fn try_from(coords: Vec<f64>) -> Result<Self> {
        Point::new(coords)
    }
}

impl From<Point> for Vec<f64> {
    fn from(p: Point) -> Vec<f64> {
        p.coords
    }
}

impl Point {
    /// Wraps a coordinate vector, rejecting empty vectors and non-finite
    /// coordinates.
    pub fn new(coords: Vec<f64>) -> Result<Self> {
        if coords.is_empty() {
            return Err(Error::domain("a point needs at least one coordinate"));
        }
        if let Some(bad) = coords.iter().find(|c| !c.is_finite()) {
            return Err(Error::domain(format!(
                "non-finite coordinate {bad} in point"
            )));
        }
        Ok(Point { coords })
    }

    /// The origin of `R^p`.
    pub fn zeros(p: usize) -> Self {
        assert!(p >= 1, "dimension must be at least 1");
        Point {
            coords: vec![0.0; p],
        }
    }

    /// `scale * e1`, the first coordinate axis scaled.
    pub fn axis(p: usize, scale: f64) -> Result<Self> {
        let mut c = vec![0.0; p.max(1)];
        c[0] = scale;
        Point::new(c)
    }

    pub fn dim(&self) -> usize {
        self.coords.len()
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.coords
    }

    pub fn into_vec(self) -> Vec<f64> {
        self.coords
    }

    /// Used by samplers that have already established finiteness.
    pub(crate) fn from_raw(coords: Vec<f64>) -> Self {
        debug_assert!(!coords.is_empty() && coords.iter().all(|c| c.is_finite()));
        Point { coords }
    }
}

/// Euclidean inner product `a . b`.
pub fn dot(a: &Point, b: &Point) -> Result<f64> {
    check_same_len(a.as_slice(), b.as_slice())?;
    Ok(dot_slices(a.as_slice(), b.as_slice()))
}

/// Euclidean norm `||a||`.
pub fn norm(a: &Point) -> f64 {
    norm2_slice(a.as_slice()).sqrt()
}

/// Euclidean distance `||a - b||`.
pub fn distance(a: &Point, b: &Point) -> Result<f64> {
    check_same_len(a.as_slice(), b.as_slice())?;
    Ok(dist2_slices(a.as_slice(), b.as_slice()).sqrt())
}

#[inline]
pub(crate) fn dot_slices(a: &[f64], b: &[f64]) -> f64 {
    debug_assert_eq!(a.len(), b.len());
    let mut acc = CompensatedSum::new();
    for (x, y) in a.iter().zip(b) {
        acc.add(x * y);
    }
    acc.value()
}

#[inline]
pub(crate) fn norm2_slice(a: &[f64]) -> f64 {
    dot_slices(a, a)
}

/// `||a - b||^2` without materializing the difference.
#[inline]
pub(crate) fn dist2_slices(a: &[f64], b: &[f64]) -> f64 {
    debug_assert_eq!(a.len(), b.len());
    let mut acc = CompensatedSum::new();
    for (x, y) in a.iter().zip(b) {
        let d = x - y;
        acc.add(d * d);
    }
    acc.value()
}

/// `dot(a - c, b - c)` without materializing the differences.
#[inline]
pub(crate) fn dot_diff_slices(a: &[f64], b: &[f64], c: &[f64]) -> f64 {
    debug_assert!(a.len() == b.len() && b.len() == c.len());
    let mut acc = CompensatedSum::new();
    for ((x, y), z) in a.iter().zip(b).zip(c) {
        acc.add((x - z) * (y - z));
    }
    acc.value()
}

/// The full description of one estimation problem: dimension, noise scale,
/// true mean, and (when the target is fixed rather than sampled) the
/// shrinkage target.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Problem {
    pub p: usize,
    pub sigma: f64,
    pub delta: Point,
    pub delta0: Option<Point>,
}

impl Problem {
    pub fn new(p: usize, sigma: f64, delta: Point, delta0: Option<Point>) -> Result<Self> {
        let problem = Problem {
            p,
            sigma,
            delta,
            delta0,
        };
        problem.validate()?;
        Ok(problem)
    }

    pub fn validate(&self) -> Result<()> {
        if self.p == 0 {
            return Err(Error::domain("dimension p must be at least 1"));
        }
        if !(self.sigma > 0.0) || !self.sigma.is_finite() {
            return Err(Error::domain(format!(
                "noise scale sigma must be positive and finite, got {}",
                self.sigma
            )));
        }
        if self.delta.dim() != self.p {
            return Err(Error::DimensionMismatch {
                left: self.p,
                right: self.delta.dim(),
            });
        }
        if let Some(d0) = &self.delta0 {
            if d0.dim() != self.p {
                return Err(Error::DimensionMismatch {
                    left: self.p,
                    right: d0.dim(),
                });
            }
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rejects_non_finite_and_empty() {
        assert!(Point::new(vec![]).is_err());
        assert!(Point::new(vec![1.0, f64::NAN]).is_err());
        assert!(Point::new(vec![f64::INFINITY]).is_err());
        assert!(Point::new(vec![0.0]).is_ok());
    }

    #[test]
    fn dot_and_norm_basics() {
        let e1 = Point::new(vec![1.0, 0.0]).unwrap();
        let e2 = Point::new(vec![0.0, 1.0]).unwrap();
        assert_eq!(dot(&e1, &e2).unwrap(), 0.0);

        let a = Point::new(vec![3.0, 4.0]).unwrap();
        assert_eq!(norm(&a), 5.0);

        let short = Point::new(vec![1.0]).unwrap();
        assert!(matches!(
            dot(&a, &short),
            Err(Error::DimensionMismatch { left: 2, right: 1 })
        ));
    }

    #[test]
    fn problem_validation() {
        let delta = Point::zeros(3);
        assert!(Problem::new(3, 1.0, delta.clone(), None).is_ok());
        assert!(Problem::new(3, 0.0, delta.clone(), None).is_err());
        assert!(Problem::new(3, -1.0, delta.clone(), None).is_err());
        assert!(Problem::new(2, 1.0, delta.clone(), None).is_err());
        let d0 = Point::zeros(2);
        assert!(Problem::new(3, 1.0, delta, Some(d0)).is_err());
    }
}
