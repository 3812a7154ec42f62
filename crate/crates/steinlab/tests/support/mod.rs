//! Shared helpers for the integration tests: independent oracles and random
//! input generators. Nothing here calls back into the code paths it checks.

#![allow(dead_code)]

use rand::Rng;
use steinlab::point::Point;
use steinlab::rng::{derive_stream, fill_standard_normal, Stream};

/// Standard normal CDF at 1, to 15 digits (reference value).
pub const PHI_ONE: f64 = 0.841_344_746_068_543;

/// `h(gamma) = || gamma (x - d0) + d0 - delta ||^2`, direct evaluation.
pub fn h_of_gamma(x: &[f64], delta: &[f64], d0: &[f64], gamma: f64) -> f64 {
    x.iter()
        .zip(d0)
        .zip(delta)
        .map(|((xi, d0i), di)| {
            let e = gamma * (xi - d0i) + d0i - di;
            e * e
        })
        .sum()
}

/// Brute-force improvement search: does any factor on the grid
/// {0, step, 2 step, ...} < 1 strictly beat gamma = 1?
pub fn grid_search_improves(x: &[f64], delta: &[f64], d0: &[f64], step: f64) -> bool {
    let h1 = h_of_gamma(x, delta, d0, 1.0);
    let mut gamma = 0.0;
    while gamma < 1.0 {
        if h_of_gamma(x, delta, d0, gamma) < h1 {
            return true;
        }
        gamma += step;
    }
    false
}

/// A random point with coordinates scaled by `spread`.
pub fn random_point(rng: &mut Stream, p: usize, spread: f64) -> Vec<f64> {
    let mut v = vec![0.0; p];
    fill_standard_normal(rng, &mut v);
    for c in v.iter_mut() {
        *c *= spread;
    }
    v
}

/// Random `(p, sigma, x, delta, d0)` tuples at mixed scales; with
/// probability 1/2 the target is planted near `x` at truncation-ball scale
/// so that both branches of the piecewise classification are exercised.
pub fn random_tuple(rng: &mut Stream) -> (usize, f64, Vec<f64>, Vec<f64>, Vec<f64>) {
    let p = rng.random_range(3..=12usize);
    let sigma = (rng.random::<f64>() * 2.0 - 1.0).exp();
    let spread = sigma * (p as f64).sqrt() * (rng.random::<f64>() * 3.0 - 1.5).exp();
    let x = random_point(rng, p, spread);
    let delta = random_point(rng, p, spread);
    let mut d0 = random_point(rng, p, 1.0);
    if rng.random::<f64>() < 0.5 {
        let r = sigma * (p as f64 - 2.0).sqrt();
        for (t, xi) in d0.iter_mut().zip(&x) {
            *t = xi + *t * r;
        }
    } else {
        for t in d0.iter_mut() {
            *t *= spread;
        }
    }
    (p, sigma, x, delta, d0)
}

pub fn pt(coords: &[f64]) -> Point {
    Point::new(coords.to_vec()).expect("finite coordinates")
}

pub fn rng_for(test_id: u64) -> Stream {
    derive_stream(0xFEED_5EED, test_id)
}

/// Applies the Householder reflection `I - 2 q q^t` (unit `q`) to `v`.
pub fn reflect(q: &[f64], v: &[f64]) -> Vec<f64> {
    let proj: f64 = q.iter().zip(v).map(|(a, b)| a * b).sum();
    q.iter().zip(v).map(|(qi, vi)| vi - 2.0 * proj * qi).collect()
}

/// A random unit vector for Householder reflections.
pub fn random_unit(rng: &mut Stream, p: usize) -> Vec<f64> {
    loop {
        let v = random_point(rng, p, 1.0);
        let n2: f64 = v.iter().map(|c| c * c).sum();
        if n2 > 1e-12 {
            let inv = 1.0 / n2.sqrt();
            return v.iter().map(|c| c * inv).collect();
        }
    }
}

/// Adaptive Simpson quadrature for the gamma-oracle spot checks.
pub fn adaptive_simpson(f: &dyn Fn(f64) -> f64, a: f64, b: f64, tol: f64) -> f64 {
    fn simpson(fa: f64, fm: f64, fb: f64, h: f64) -> f64 {
        h / 6.0 * (fa + 4.0 * fm + fb)
    }
    #[allow(clippy::too_many_arguments)]
    fn recurse(
        f: &dyn Fn(f64) -> f64,
        a: f64,
        fa: f64,
        b: f64,
        fb: f64,
        m: f64,
        fm: f64,
        whole: f64,
        tol: f64,
        depth: u32,
    ) -> f64 {
        let lm = 0.5 * (a + m);
        let rm = 0.5 * (m + b);
        let (flm, frm) = (f(lm), f(rm));
        let left = simpson(fa, flm, fm, m - a);
        let right = simpson(fm, frm, fb, b - m);
        let delta = left + right - whole;
        if depth == 0 || delta.abs() <= 15.0 * tol {
            left + right + delta / 15.0
        } else {
            recurse(f, a, fa, m, fm, lm, flm, left, tol / 2.0, depth - 1)
                + recurse(f, m, fm, b, fb, rm, frm, right, tol / 2.0, depth - 1)
        }
    }
    let m = 0.5 * (a + b);
    let (fa, fm, fb) = (f(a), f(m), f(b));
    let whole = simpson(fa, fm, fb, b - a);
    recurse(f, a, fa, b, fb, m, fm, whole, tol, 50)
}
