//! Exact region predicates for where shrinkage helps.
//!
//! All of the sets below are balls and halfspaces determined by `x` (the
//! observation), `delta` (the true mean), `delta0` (the shrinkage target),
//! and the noise scale. Each predicate evaluates its defining inequality
//! strictly; boundaries have measure zero and floating point cannot
//! adjudicate them anyway, so oracle-agreement tests carry an explicit
//! relative boundary band.
//!
//! Two predicates answer the same question by different algebra on purpose:
//! [`classify_target`] evaluates the derived piecewise ball/halfspace
//! conditions, while [`js_plus_improves`] just runs the plus-rule estimator
//! and compares distances. Their agreement (away from boundaries) is one of
//! the main correctness checks of the crate.

use crate::error::{check_same_len, Error, Result};
use crate::estimators::{js, js_plus, js_plus_factor};
use crate::point::{dist2_slices, dot_diff_slices, Point};

/// Where a shrinkage target sits relative to the plus-rule improvement
/// region: the truncation ball around `x`, the ball `B` around the truth,
/// and the halfspace `K`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct RegionLabel {
    /// `||delta0 - x||^2 < sigma^2 (p - 2)`: the plus rule collapses to
    /// `delta0` here.
    pub inside_truncation_ball: bool,
    /// `||delta0 - delta|| < ||x - delta||`: the target is closer to the
    /// truth than the observation is.
    pub in_ball_b: bool,
    /// `(x - delta) . (x - delta0) > sigma^2 (p - 2) / 2`.
    pub in_halfspace_k: bool,
    /// Whether plus-rule shrinkage toward this target strictly improves on
    /// `x`: the ball condition inside the truncation ball, the halfspace
    /// condition outside it.
    pub improves: bool,
}

/// Membership in the sets that separate the plus rule from the plain rule:
/// `C` (plus rule improves), `D` (plain rule improves), the truncation ball
/// `B1` around the target, and the ball `B2` of radius `||delta0 - delta||`
/// around the truth.
///
/// Within the truncation ball, `B2` excludes `D`: for `x` in `B1 ∩ B2` the
/// plain rule strictly worsens (both strict inequalities feed the same
/// polarization identity), which is what makes the plus rule's improvement
/// set strictly larger. The exclusion is *not* global — far outside the
/// truncation ball the plain step is tiny and can improve even deep inside
/// `B2`; see `plain_rule_can_improve_inside_b2` below.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct AppCMembership {
    pub in_c: bool,
    pub in_d: bool,
    /// `||x - delta0|| < sigma sqrt(p - 2)`; the two rules differ exactly here.
    pub in_trunc_b1: bool,
    /// `||x - delta|| < ||delta0 - delta||`; the plain rule always loses
    /// here when `x` is also inside the truncation ball.
    pub in_dom_b2: bool,
}

/// True iff the observed distance to the target strictly exceeds the true
/// one: `||x - delta0|| > ||delta - delta0||`.
pub fn overestimates_distance(x: &Point, delta: &Point, delta0: &Point) -> Result<bool> {
    check_same_len(x.as_slice(), delta.as_slice())?;
    check_same_len(x.as_slice(), delta0.as_slice())?;
    Ok(dist2_slices(x.as_slice(), delta0.as_slice())
        > dist2_slices(delta.as_slice(), delta0.as_slice()))
}

/// Derivative at `gamma = 1` of `h(gamma) = ||gamma (x - delta0) + delta0 - delta||^2`:
/// `h'(1) = 2 (x - delta0) . (x - delta)`.
///
/// Equivalently `2 [ ||x - m||^2 - ||delta - m||^2 ]` with `m` the midpoint
/// of `delta0` and `delta`; the two forms agree to roundoff.
pub fn h_prime_at_one(x: &Point, delta: &Point, delta0: &Point) -> Result<f64> {
    check_same_len(x.as_slice(), delta.as_slice())?;
    check_same_len(x.as_slice(), delta0.as_slice())?;
    Ok(h_prime_at_one_slices(
        x.as_slice(),
        delta.as_slice(),
        delta0.as_slice(),
    ))
}

#[inline]
pub(crate) fn h_prime_at_one_slices(x: &[f64], delta: &[f64], delta0: &[f64]) -> f64 {
    // 2 (x - delta0) . (x - delta), accumulated as one pass.
    let mut acc = crate::sum::CompensatedSum::new();
    for ((xi, di), d0i) in x.iter().zip(delta).zip(delta0) {
        acc.add((xi - d0i) * (xi - di));
    }
    2.0 * acc.value()
}

/// True iff some factor `gamma` in `[0, 1)` strictly improves on `x`, i.e.
/// `h'(1) > 0`, i.e. `x` lies strictly outside the ball of radius
/// `||delta - delta0|| / 2` centered at the midpoint of `delta0` and `delta`.
pub fn shrinkage_can_help(x: &Point, delta: &Point, delta0: &Point) -> Result<bool> {
    Ok(h_prime_at_one(x, delta, delta0)? > 0.0)
}

/// The same condition read as a condition on the target: shrinking `x`
/// toward `delta0` can help iff `(x - delta0) . (x - delta) > 0`, i.e.
/// `delta0` lies strictly outside the closed halfspace through `x` with
/// inward normal `x - delta`.
pub fn target_can_help(delta0: &Point, x: &Point, delta: &Point) -> Result<bool> {
    shrinkage_can_help(x, delta, delta0)
}

/// Ground truth by direct evaluation: does the plus-rule estimate land
/// strictly closer to `delta` than `x` is?
pub fn js_plus_improves(x: &Point, delta: &Point, delta0: &Point, sigma: f64) -> Result<bool> {
    check_same_len(x.as_slice(), delta.as_slice())?;
    let est = js_plus(x, delta0, sigma)?;
    Ok(dist2_slices(est.as_slice(), delta.as_slice())
        < dist2_slices(x.as_slice(), delta.as_slice()))
}

#[inline]
pub(crate) fn js_plus_improves_slices(
    x: &[f64],
    delta: &[f64],
    delta0: &[f64],
    sigma: f64,
) -> bool {
    let norm2 = dist2_slices(x, delta0);
    let gamma = js_plus_factor(norm2, sigma, x.len());
    let mut acc = crate::sum::CompensatedSum::new();
    for ((xi, di), d0i) in x.iter().zip(delta).zip(delta0) {
        let e = gamma * (xi - d0i) + d0i - di;
        acc.add(e * e);
    }
    acc.value() < dist2_slices(x, delta)
}

/// Classifies a target by the piecewise ball/halfspace conditions rather
/// than by running the estimator, so that agreement with
/// [`js_plus_improves`] is a genuine two-route check.
pub fn classify_target(delta0: &Point, x: &Point, delta: &Point, sigma: f64) -> Result<RegionLabel> {
    check_same_len(x.as_slice(), delta.as_slice())?;
    check_same_len(x.as_slice(), delta0.as_slice())?;
    if x.dim() < 3 {
        return Err(Error::domain(format!(
            "target classification requires p >= 3, got p = {}",
            x.dim()
        )));
    }
    if !(sigma > 0.0) || !sigma.is_finite() {
        return Err(Error::domain(format!(
            "sigma must be positive and finite, got {sigma}"
        )));
    }
    if dist2_slices(x.as_slice(), delta.as_slice()) == 0.0 {
        return Err(Error::domain("K requires X != delta".to_string()));
    }
    Ok(classify_target_slices(
        delta0.as_slice(),
        x.as_slice(),
        delta.as_slice(),
        sigma,
    ))
}

#[inline]
pub(crate) fn classify_target_slices(
    delta0: &[f64],
    x: &[f64],
    delta: &[f64],
    sigma: f64,
) -> RegionLabel {
    let p = x.len();
    let s2p2 = sigma * sigma * (p as f64 - 2.0);
    let inside_truncation_ball = dist2_slices(delta0, x) < s2p2;
    let in_ball_b = dist2_slices(delta0, delta) < dist2_slices(x, delta);
    // (x - delta) . (x - delta0) > sigma^2 (p-2) / 2
    let in_halfspace_k = dot_diff_slices(delta, delta0, x) > s2p2 / 2.0;
    let improves = if inside_truncation_ball {
        in_ball_b
    } else {
        in_halfspace_k
    };
    RegionLabel {
        inside_truncation_ball,
        in_ball_b,
        in_halfspace_k,
        improves,
    }
}

/// Membership in `C`, `D`, and the two balls that drive the strict
/// closeness advantage of the plus rule over the plain rule.
pub fn appc_membership(x: &Point, delta: &Point, delta0: &Point, sigma: f64) -> Result<AppCMembership> {
    check_same_len(x.as_slice(), delta.as_slice())?;
    check_same_len(x.as_slice(), delta0.as_slice())?;
    let dist2_x = dist2_slices(x.as_slice(), delta.as_slice());

    let est_plus = js_plus(x, delta0, sigma)?;
    let in_c = dist2_slices(est_plus.as_slice(), delta.as_slice()) < dist2_x;

    let est_js = js(x, delta0, sigma)?;
    let in_d = dist2_slices(est_js.as_slice(), delta.as_slice()) < dist2_x;

    let p = x.dim() as f64;
    let in_trunc_b1 = dist2_slices(x.as_slice(), delta0.as_slice()) < sigma * sigma * (p - 2.0);
    let in_dom_b2 = dist2_x < dist2_slices(delta0.as_slice(), delta.as_slice());

    Ok(AppCMembership {
        in_c,
        in_d,
        in_trunc_b1,
        in_dom_b2,
    })
}
