//! The shrinkage-estimator family.
//!
//! Every estimator here has the form `gamma * (x - delta0) + delta0`: the
//! observation pulled toward a target `delta0` by a factor `gamma`.
//!
//! * [`shrink`] applies a fixed factor.
//! * [`js`] is the James–Stein rule: `gamma = 1 - sigma^2 (p-2) / ||x - delta0||^2`,
//!   which can go negative and overshoot past the target.
//! * [`js_plus`] is the plus rule: the same factor clamped at zero, so the
//!   estimate never leaves the segment from `delta0` to `x`.
//! * [`oracle_gamma`] is the factor an oracle who knows the true mean would
//!   pick, i.e. the minimizer of `||gamma (x - delta0) + delta0 - delta||^2`
//!   over `gamma` in `[0, 1]`.
//!
//! `gamma = 1` is admitted so that the raw observation `x` itself is a
//! member of the family; the dimension is always inferred from the vectors.

use serde::{Deserialize, Serialize};

use crate::error::{check_same_len, Error, Result};
use crate::point::{dist2_slices, dot_diff_slices, Point};

/// A shrinkage factor in `[0, 1]`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "f64", into = "f64")]
pub struct ShrinkFactor(f64);

impl ShrinkFactor {
    pub fn new(gamma: f64) -> Result<Self> {
        if !(0.0..=1.0).contains(&gamma) {
            return Err(Error::domain(format!(
                "shrink factor must lie in [0, 1], got {gamma}"
            )));
        }
        Ok(ShrinkFactor(gamma))
    }

    pub fn value(&self) -> f64 {
        self.0
    }
}

impl TryFrom<f64> for ShrinkFactor {
    type Error = Error;
    fn try_from(gamma: f64) -> Result<Self> {
        ShrinkFactor::new(gamma)
    }
}

impl From<ShrinkFactor> for f64 {
    fn from(g: ShrinkFactor) -> f64 {
        g.0
    }
}

/// Which member of the family to apply.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum EstimatorKind {
    /// The raw observation `x`.
    Identity,
    /// Fixed-factor shrinkage toward the target.
    FixedGamma(ShrinkFactor),
    /// The James–Stein rule.
    JamesStein,
    /// The truncated ("plus rule") James–Stein rule.
    JamesSteinPlus,
}

impl EstimatorKind {
    /// Stable lowercase name, used in CSV rows.
    pub fn label(&self) -> String {
        match self {
            EstimatorKind::Identity => "identity".to_string(),
            EstimatorKind::FixedGamma(g) => format!("fixed_gamma({})", g.value()),
            EstimatorKind::JamesStein => "js".to_string(),
            EstimatorKind::JamesSteinPlus => "js_plus".to_string(),
        }
    }
}

fn check_p_at_least_3(p: usize) -> Result<()> {
    if p < 3 {
        return Err(Error::domain(format!("JS requires p >= 3, got p = {p}")));
    }
    Ok(())
}

fn check_sigma(sigma: f64) -> Result<()> {
    if !(sigma > 0.0) || !sigma.is_finite() {
        return Err(Error::domain(format!(
            "sigma must be positive and finite, got {sigma}"
        )));
    }
    Ok(())
}

/// `gamma * (x - delta0) + delta0`, written coordinatewise.
#[inline]
pub(crate) fn shrink_into(x: &[f64], delta0: &[f64], gamma: f64, out: &mut [f64]) {
    for ((o, xi), di) in out.iter_mut().zip(x).zip(delta0) {
        *o = gamma * (xi - di) + di;
    }
}

/// The James–Stein factor `1 - sigma^2 (p - 2) / norm2`, where `norm2` is
/// `||x - delta0||^2`. Infinite when `norm2 == 0`.
#[inline]
pub(crate) fn js_factor(norm2: f64, sigma: f64, p: usize) -> f64 {
    1.0 - sigma * sigma * (p as f64 - 2.0) / norm2
}

/// Applies fixed-factor shrinkage toward `delta0`.
pub fn shrink(x: &Point, delta0: &Point, gamma: ShrinkFactor) -> Result<Point> {
    check_same_len(x.as_slice(), delta0.as_slice())?;
    let mut out = vec![0.0; x.dim()];
    shrink_into(x.as_slice(), delta0.as_slice(), gamma.value(), &mut out);
    Ok(Point::from_raw(out))
}

/// The James–Stein estimate of the mean, shrinking `x` toward `delta0`.
///
/// Singular at `x == delta0` (the factor divides by `||x - delta0||^2`);
/// the plus rule [`js_plus`] is total there instead.
pub fn js(x: &Point, delta0: &Point, sigma: f64) -> Result<Point> {
    check_same_len(x.as_slice(), delta0.as_slice())?;
    check_p_at_least_3(x.dim())?;
    check_sigma(sigma)?;
    let norm2 = dist2_slices(x.as_slice(), delta0.as_slice());
    if norm2 == 0.0 {
        return Err(Error::Singular("James-Stein rule at x == delta0"));
    }
    let gamma = js_factor(norm2, sigma, x.dim());
    let mut out = vec![0.0; x.dim()];
    shrink_into(x.as_slice(), delta0.as_slice(), gamma, &mut out);
    Point::new(out)
}

/// The plus-rule James–Stein estimate: the factor clamped at zero.
///
/// Inside the truncation ball `||x - delta0||^2 <= sigma^2 (p - 2)` the
/// output is exactly `delta0`; in particular `x == delta0` is not singular.
pub fn js_plus(x: &Point, delta0: &Point, sigma: f64) -> Result<Point> {
    check_same_len(x.as_slice(), delta0.as_slice())?;
    check_p_at_least_3(x.dim())?;
    check_sigma(sigma)?;
    let norm2 = dist2_slices(x.as_slice(), delta0.as_slice());
    let gamma = js_plus_factor(norm2, sigma, x.dim());
    if gamma == 0.0 {
        return Ok(delta0.clone());
    }
    let mut out = vec![0.0; x.dim()];
    shrink_into(x.as_slice(), delta0.as_slice(), gamma, &mut out);
    Ok(Point::from_raw(out))
}

/// The clamped factor used by [`js_plus`]; 0 inside the truncation ball.
#[inline]
pub(crate) fn js_plus_factor(norm2: f64, sigma: f64, p: usize) -> f64 {
    if norm2 <= sigma * sigma * (p as f64 - 2.0) {
        0.0
    } else {
        js_factor(norm2, sigma, p)
    }
}

/// The best factor in hindsight: minimizes `||gamma (x - delta0) + delta0 - delta||^2`
/// over `gamma` in `[0, 1]`.
///
/// The unconstrained minimizer is `(x - delta0) . (delta - delta0) / ||x - delta0||^2`,
/// projected onto the interval.
pub fn oracle_gamma(x: &Point, delta0: &Point, delta: &Point) -> Result<ShrinkFactor> {
    check_same_len(x.as_slice(), delta0.as_slice())?;
    check_same_len(x.as_slice(), delta.as_slice())?;
    let norm2 = dist2_slices(x.as_slice(), delta0.as_slice());
    if norm2 == 0.0 {
        return Err(Error::Singular("oracle factor at x == delta0"));
    }
    let num = dot_diff_slices(x.as_slice(), delta.as_slice(), delta0.as_slice());
    ShrinkFactor::new((num / norm2).clamp(0.0, 1.0))
}

/// Dispatches to the estimator named by `kind`.
///
/// `sigma` is only consulted by the James–Stein rules.
pub fn apply(kind: EstimatorKind, x: &Point, delta0: &Point, sigma: f64) -> Result<Point> {
    match kind {
        EstimatorKind::Identity => {
            check_same_len(x.as_slice(), delta0.as_slice())?;
            Ok(x.clone())
        }
        EstimatorKind::FixedGamma(gamma) => shrink(x, delta0, gamma),
        EstimatorKind::JamesStein => js(x, delta0, sigma),
        EstimatorKind::JamesSteinPlus => js_plus(x, delta0, sigma),
    }
}
