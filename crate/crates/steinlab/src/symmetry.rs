//! Directional and spherical symmetry: samplers and empirical tests.
//!
//! A vector is *directionally symmetric* when its unit direction has the
//! same law as its antipode; that is strictly weaker than full symmetry
//! `Y =d -Y`. Equivalent empirical signatures, tested here on sampled
//! batteries: every central halfspace has probability 1/2, and every closed
//! convex cone has the same probability as its reflection.
//!
//! The sampler family includes a witness that separates the two notions:
//! [`SamplerKind::DirectionalOnly`] draws a uniform direction and then makes
//! the *radius* depend on the direction, so the direction law is perfectly
//! symmetric while the joint law is not.

use serde::{Deserialize, Serialize};

use crate::dist::normal_sf;
use crate::error::{Error, Result};
use crate::montecarlo::{run_chunks, MCResult};
use crate::point::{dot_slices, norm2_slice, Point};
use crate::rng::{derive_stream, fill_standard_normal, SeedSpec, Stream};

/// The distribution families used as symmetry fixtures.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum SamplerKind {
    /// `N(0, sigma^2 I)`: spherically symmetric.
    SphericalGaussian { sigma: f64 },
    /// Componentwise scaled Gaussian: symmetric but not spherical.
    Elliptical { scales: Vec<f64> },
    /// Uniform direction with direction-dependent radius (1 on the first
    /// open half, 2 on the rest): directionally symmetric but not symmetric.
    DirectionalOnly,
    /// `N(shift * e1, I)` with `shift != 0`: neither. Negative control.
    AsymmetricControl { shift: f64 },
}

/// A fixture distribution in dimension `p`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SymmetrySampler {
    pub kind: SamplerKind,
    pub p: usize,
}

impl SymmetrySampler {
    pub fn new(kind: SamplerKind, p: usize) -> Result<Self> {
        let s = SymmetrySampler { kind, p };
        s.validate()?;
        Ok(s)
    }

    pub fn validate(&self) -> Result<()> {
        if self.p == 0 {
            return Err(Error::domain("dimension p must be at least 1"));
        }
        match &self.kind {
            SamplerKind::SphericalGaussian { sigma } => {
                if !(sigma > &0.0) || !sigma.is_finite() {
                    return Err(Error::domain(format!("sigma must be positive, got {sigma}")));
                }
            }
            SamplerKind::Elliptical { scales } => {
                if scales.len() != self.p {
                    return Err(Error::DimensionMismatch {
                        left: self.p,
                        right: scales.len(),
                    });
                }
                if scales.iter().any(|s| !(*s > 0.0) || !s.is_finite()) {
                    return Err(Error::domain("all axis scales must be positive".to_string()));
                }
            }
            SamplerKind::DirectionalOnly => {
                if self.p < 2 {
                    return Err(Error::domain(
                        "the directional-only witness needs p >= 2".to_string(),
                    ));
                }
            }
            SamplerKind::AsymmetricControl { shift } => {
                if *shift == 0.0 || !shift.is_finite() {
                    return Err(Error::domain(
                        "the asymmetric control needs a nonzero mean shift".to_string(),
                    ));
                }
            }
        }
        Ok(())
    }

    /// One draw from the fixture.
    pub fn sample(&self, rng: &mut Stream) -> Point {
        let mut out = vec![0.0; self.p];
        self.fill_sample(rng, &mut out);
        Point::from_raw(out)
    }

    pub(crate) fn fill_sample(&self, rng: &mut Stream, out: &mut [f64]) {
        match &self.kind {
            SamplerKind::SphericalGaussian { sigma } => {
                fill_standard_normal(rng, out);
                for o in out.iter_mut() {
                    *o *= sigma;
                }
            }
            SamplerKind::Elliptical { scales } => {
                fill_standard_normal(rng, out);
                for (o, s) in out.iter_mut().zip(scales) {
                    *o *= s;
                }
            }
            SamplerKind::DirectionalOnly => {
                fill_uniform_sphere(rng, out);
                // Radius 1 where the first coordinate is positive, 2
                // elsewhere: the direction marginal stays uniform, the
                // joint law is visibly asymmetric.
                if out[0] <= 0.0 {
                    for o in out.iter_mut() {
                        *o *= 2.0;
                    }
                }
            }
            SamplerKind::AsymmetricControl { shift } => {
                fill_standard_normal(rng, out);
                out[0] += shift;
            }
        }
    }
}

fn fill_uniform_sphere(rng: &mut Stream, out: &mut [f64]) {
    loop {
        fill_standard_normal(rng, out);
        let n2 = norm2_slice(out);
        if n2 > 0.0 {
            let inv = 1.0 / n2.sqrt();
            for o in out.iter_mut() {
                *o *= inv;
            }
            return;
        }
        // ||Z|| == 0 has probability zero; redraw rather than divide by it.
    }
}

/// A point uniform on the unit sphere of `R^p`: a normalized standard
/// Gaussian.
pub fn uniform_sphere(p: usize, rng: &mut Stream) -> Result<Point> {
    if p < 2 {
        return Err(Error::domain(format!(
            "uniform sphere sampling needs p >= 2, got {p}"
        )));
    }
    let mut out = vec![0.0; p];
    fill_uniform_sphere(rng, &mut out);
    Ok(Point::from_raw(out))
}

/// A halfspace `{ y : normal . y > offset }`; central when `offset == 0`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HalfspaceSpec {
    pub normal: Point,
    pub offset: f64,
}

impl HalfspaceSpec {
    pub fn new(normal: Point, offset: f64) -> Result<Self> {
        if norm2_slice(normal.as_slice()) == 0.0 {
            return Err(Error::domain("halfspace normal must be nonzero"));
        }
        if !offset.is_finite() {
            return Err(Error::domain("halfspace offset must be finite"));
        }
        Ok(HalfspaceSpec { normal, offset })
    }
}

/// Estimates `Pr[ normal . Y > offset ]` for the sampler.
pub fn empirical_halfspace_prob(
    s: &SymmetrySampler,
    h: &HalfspaceSpec,
    n: u64,
    seed: SeedSpec,
) -> Result<MCResult> {
    s.validate()?;
    if h.normal.dim() != s.p {
        return Err(Error::DimensionMismatch {
            left: s.p,
            right: h.normal.dim(),
        });
    }
    if n == 0 {
        return Err(Error::domain("a Monte Carlo run needs n >= 1 draws"));
    }
    let chunks = run_chunks(n, seed, |draws, mut rng| {
        let mut y = vec![0.0; s.p];
        let mut hits = 0u64;
        for _ in 0..draws {
            s.fill_sample(&mut rng, &mut y);
            if dot_slices(&y, h.normal.as_slice()) > h.offset {
                hits += 1;
            }
        }
        Ok(hits)
    })?;
    Ok(MCResult::from_binomial(chunks.iter().sum(), n))
}

#[inline]
fn in_cone(y: &[f64], cone: &[HalfspaceSpec]) -> bool {
    cone.iter().all(|h| dot_slices(y, h.normal.as_slice()) >= 0.0)
}

/// Estimates the pair `(Pr[Y in C], Pr[-Y in C])` for the closed convex cone
/// `C` cut out by central halfspaces. The two probabilities agree for any
/// directionally symmetric sampler.
pub fn empirical_cone_symmetry(
    s: &SymmetrySampler,
    cone: &[HalfspaceSpec],
    n: u64,
    seed: SeedSpec,
) -> Result<(MCResult, MCResult)> {
    s.validate()?;
    if cone.is_empty() {
        return Err(Error::domain("a cone needs at least one halfspace"));
    }
    for h in cone {
        if h.normal.dim() != s.p {
            return Err(Error::DimensionMismatch {
                left: s.p,
                right: h.normal.dim(),
            });
        }
        if h.offset != 0.0 {
            return Err(Error::domain(
                "cone halfspaces must be central (offset 0)".to_string(),
            ));
        }
    }
    if n == 0 {
        return Err(Error::domain("a Monte Carlo run needs n >= 1 draws"));
    }
    let chunks = run_chunks(n, seed, |draws, mut rng| {
        let mut y = vec![0.0; s.p];
        let mut neg = vec![0.0; s.p];
        let mut hits = (0u64, 0u64);
        for _ in 0..draws {
            s.fill_sample(&mut rng, &mut y);
            for (m, v) in neg.iter_mut().zip(&y) {
                *m = -v;
            }
            if in_cone(&y, cone) {
                hits.0 += 1;
            }
            if in_cone(&neg, cone) {
                hits.1 += 1;
            }
        }
        Ok(hits)
    })?;
    let pos: u64 = chunks.iter().map(|c| c.0).sum();
    let neg: u64 = chunks.iter().map(|c| c.1).sum();
    Ok((
        MCResult::from_binomial(pos, n),
        MCResult::from_binomial(neg, n),
    ))
}

/// Settings for the sampled symmetry battery.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BatteryConfig {
    /// Random central halfspaces to test against probability 1/2.
    pub halfspaces: usize,
    /// Random orthant-like cones to test for reflection symmetry.
    pub cones: usize,
    /// Draws shared by all tests of the battery.
    pub n: u64,
    /// Per-test significance level.
    pub significance: f64,
}

impl Default for BatteryConfig {
    fn default() -> Self {
        // 40 tests at the 1e-3 level keep the whole battery's false-alarm
        // probability near 4 percent.
        BatteryConfig {
            halfspaces: 32,
            cones: 8,
            n: 1_000_000,
            significance: 1e-3,
        }
    }
}

/// One line of the battery report.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BatteryRow {
    pub test: String,
    /// `Pr[Y in H]` for halfspaces, `Pr[Y in C]` for cones.
    pub estimate: f64,
    /// `Pr[-Y in C]` for cones; absent for halfspaces.
    pub estimate_neg: Option<f64>,
    /// The z statistic of the tested null.
    pub statistic: f64,
    pub p_value: f64,
    pub pass: bool,
    pub n: u64,
}

fn two_sided_p(z: f64) -> f64 {
    2.0 * normal_sf(z.abs())
}

/// Runs the full battery: `cfg.halfspaces` random central halfspaces (null:
/// probability 1/2) and `cfg.cones` random rotated orthants (null: equal
/// probability for the cone and its reflection), all evaluated on the same
/// `cfg.n` draws.
///
/// Consumes `seed` and `seed.offset(1)`: the first stream draws the test
/// geometry, the second drives the shared sample pass.
pub fn run_battery(
    s: &SymmetrySampler,
    cfg: &BatteryConfig,
    seed: SeedSpec,
) -> Result<Vec<BatteryRow>> {
    s.validate()?;
    if cfg.halfspaces == 0 && cfg.cones == 0 {
        return Err(Error::domain("battery size must be at least 1"));
    }
    if cfg.n == 0 {
        return Err(Error::domain("a Monte Carlo run needs n >= 1 draws"));
    }
    if !(cfg.significance > 0.0 && cfg.significance < 1.0) {
        return Err(Error::domain("significance must lie in (0, 1)".to_string()));
    }
    if s.p < 2 {
        return Err(Error::domain("the battery needs p >= 2".to_string()));
    }

    // Test geometry comes from its own stream so the estimation pass cannot
    // overlap it.
    let mut geom_rng = derive_stream(seed.master_seed, seed.stream_id);
    let normals: Vec<Vec<f64>> = (0..cfg.halfspaces)
        .map(|_| uniform_sphere(s.p, &mut geom_rng).map(Point::into_vec))
        .collect::<Result<_>>()?;
    let cones: Vec<Vec<Vec<f64>>> = (0..cfg.cones)
        .map(|_| random_orthant_frame(s.p, &mut geom_rng))
        .collect();

    struct Counts {
        halfspace: Vec<u64>,
        cone_pos: Vec<u64>,
        cone_neg: Vec<u64>,
        cone_both: Vec<u64>,
    }

    let sample_seed = seed.offset(1);
    let chunks = run_chunks(cfg.n, sample_seed, |draws, mut rng| {
        let mut y = vec![0.0; s.p];
        let mut neg = vec![0.0; s.p];
        let mut counts = Counts {
            halfspace: vec![0; normals.len()],
            cone_pos: vec![0; cones.len()],
            cone_neg: vec![0; cones.len()],
            cone_both: vec![0; cones.len()],
        };
        for _ in 0..draws {
            s.fill_sample(&mut rng, &mut y);
            for (m, v) in neg.iter_mut().zip(&y) {
                *m = -v;
            }
            for (c, normal) in counts.halfspace.iter_mut().zip(&normals) {
                if dot_slices(&y, normal) > 0.0 {
                    *c += 1;
                }
            }
            for (k, frame) in cones.iter().enumerate() {
                let pos = frame.iter().all(|q| dot_slices(&y, q) >= 0.0);
                let negh = frame.iter().all(|q| dot_slices(&neg, q) >= 0.0);
                counts.cone_pos[k] += pos as u64;
                counts.cone_neg[k] += negh as u64;
                counts.cone_both[k] += (pos && negh) as u64;
            }
        }
        Ok(counts)
    })?;

    let nf = cfg.n as f64;
    let mut rows = Vec::with_capacity(cfg.halfspaces + cfg.cones);
    for i in 0..cfg.halfspaces {
        let hits: u64 = chunks.iter().map(|c| c.halfspace[i]).sum();
        let phat = hits as f64 / nf;
        // Null SE is exact: sqrt(1/4n).
        let z = (phat - 0.5) / (0.25 / nf).sqrt();
        let p_value = two_sided_p(z);
        rows.push(BatteryRow {
            test: format!("halfspace_{i:02}"),
            estimate: phat,
            estimate_neg: None,
            statistic: z,
            p_value,
            pass: p_value >= cfg.significance,
            n: cfg.n,
        });
    }
    for k in 0..cfg.cones {
        let pos: u64 = chunks.iter().map(|c| c.cone_pos[k]).sum();
        let neg: u64 = chunks.iter().map(|c| c.cone_neg[k]).sum();
        let both: u64 = chunks.iter().map(|c| c.cone_both[k]).sum();
        let p1 = pos as f64 / nf;
        let p2 = neg as f64 / nf;
        let diff = p1 - p2;
        // Per-draw difference is in {-1, 0, 1}; its variance is
        // p1 + p2 - 2 p_both - diff^2. The floor keeps z finite in the
        // degenerate all-zero-variance case.
        let var = (p1 + p2 - 2.0 * both as f64 / nf - diff * diff).max(0.0);
        let se = (var / nf).sqrt();
        let z = if diff == 0.0 { 0.0 } else { diff / se.max(1e-300) };
        let p_value = two_sided_p(z);
        rows.push(BatteryRow {
            test: format!("cone_{k}"),
            estimate: p1,
            estimate_neg: Some(p2),
            statistic: z,
            p_value,
            pass: p_value >= cfg.significance,
            n: cfg.n,
        });
    }
    Ok(rows)
}

/// A uniformly rotated orthant: Gram-Schmidt on `p` Gaussian vectors.
fn random_orthant_frame(p: usize, rng: &mut Stream) -> Vec<Vec<f64>> {
    loop {
        let mut frame: Vec<Vec<f64>> = Vec::with_capacity(p);
        let mut ok = true;
        for _ in 0..p {
            let mut v = vec![0.0; p];
            fill_standard_normal(rng, &mut v);
            for q in &frame {
                let proj = dot_slices(&v, q);
                for (vi, qi) in v.iter_mut().zip(q) {
                    *vi -= proj * qi;
                }
            }
            let n2 = norm2_slice(&v);
            if n2 < 1e-12 {
                ok = false;
                break;
            }
            let inv = 1.0 / n2.sqrt();
            for vi in v.iter_mut() {
                *vi *= inv;
            }
            frame.push(v);
        }
        if ok {
            return frame;
        }
    }
}
