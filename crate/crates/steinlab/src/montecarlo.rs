//! Scenario-driven Monte Carlo estimation.
//!
//! Draws are organized into fixed-size chunks; chunk `c` of a run keyed by a
//! [`SeedSpec`] always uses ChaCha stream `c` under that key, and partial
//! sums are combined in chunk order with compensated summation. Estimates
//! are therefore bit-identical for any worker count, and a run is fully
//! reproducible from its seed.
//!
//! When several metrics are requested in one run they are evaluated on the
//! *same* draws (common random numbers), which is what makes small
//! estimator-to-estimator gaps resolvable at feasible sample sizes.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::estimators::{js_factor, js_plus_factor, EstimatorKind};
use crate::geometry;
use crate::point::{dist2_slices, norm2_slice, Point};
use crate::rng::{chunk_stream, fill_gaussian, SeedSpec, Stream};
use crate::sum::CompensatedSum;

/// Draws per chunk. Fixed: chunk boundaries are part of the reproducibility
/// contract, so this must never depend on the worker count.
pub(crate) const CHUNK: u64 = 1 << 15;

/// Runs `per_chunk` over the fixed chunk grid covering `n` draws, in
/// parallel, and returns the per-chunk outputs in chunk order.
pub(crate) fn run_chunks<T, F>(n: u64, seed: SeedSpec, per_chunk: F) -> Result<Vec<T>>
where
    T: Send,
    F: Fn(u64, Stream) -> Result<T> + Sync,
{
    let n_chunks = n.div_ceil(CHUNK);
    (0..n_chunks)
        .into_par_iter()
        .map(|c| {
            let lo = c * CHUNK;
            let hi = (lo + CHUNK).min(n);
            per_chunk(hi - lo, chunk_stream(seed, c))
        })
        .collect()
}

/// One Monte Carlo estimate with its uncertainty.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MCResult {
    pub n: u64,
    pub estimate: f64,
    pub std_error: f64,
    pub ci95_low: f64,
    pub ci95_high: f64,
}

impl MCResult {
    fn with_se(n: u64, estimate: f64, std_error: f64) -> Self {
        MCResult {
            n,
            estimate,
            std_error,
            ci95_low: estimate - 1.96 * std_error,
            ci95_high: estimate + 1.96 * std_error,
        }
    }

    /// Probability estimate with the binomial standard error.
    pub fn from_binomial(successes: u64, n: u64) -> Self {
        let phat = successes as f64 / n as f64;
        let se = (phat * (1.0 - phat) / n as f64).sqrt();
        Self::with_se(n, phat, se)
    }

    /// Mean estimate with the standard error of the mean.
    pub(crate) fn from_moments(sum: f64, sumsq: f64, n: u64) -> Self {
        let nf = n as f64;
        let mean = sum / nf;
        let var = ((sumsq - sum * sum / nf) / (nf - 1.0).max(1.0)).max(0.0);
        Self::with_se(n, mean, (var / nf).sqrt())
    }
}

/// How the shrinkage target is produced for each draw.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum TargetRule {
    /// A fixed target point.
    Fixed { delta0: Point },
    /// `delta0 ~ N(psi, tau^2 I)`, independent of the observation.
    IndependentPrior { psi: Point, tau: f64 },
    /// `delta0 ~ N(X, tau^2 I)`: the target is chosen from the data.
    DataCentered { tau: f64 },
}

/// A complete simulation scenario.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScenarioSpec {
    pub p: usize,
    pub sigma: f64,
    pub delta: Point,
    pub target_rule: TargetRule,
}

impl ScenarioSpec {
    pub fn validate(&self) -> Result<()> {
        if self.p == 0 {
            return Err(Error::domain("dimension p must be at least 1"));
        }
        if !(self.sigma > 0.0) || !self.sigma.is_finite() {
            return Err(Error::domain(format!(
                "sigma must be positive and finite, got {}",
                self.sigma
            )));
        }
        if self.delta.dim() != self.p {
            return Err(Error::DimensionMismatch {
                left: self.p,
                right: self.delta.dim(),
            });
        }
        match &self.target_rule {
            TargetRule::Fixed { delta0 } => {
                if delta0.dim() != self.p {
                    return Err(Error::DimensionMismatch {
                        left: self.p,
                        right: delta0.dim(),
                    });
                }
            }
            TargetRule::IndependentPrior { psi, tau } => {
                if psi.dim() != self.p {
                    return Err(Error::DimensionMismatch {
                        left: self.p,
                        right: psi.dim(),
                    });
                }
                if !(tau > &0.0) || !tau.is_finite() {
                    return Err(Error::domain(format!("tau must be positive, got {tau}")));
                }
            }
            TargetRule::DataCentered { tau } => {
                if !(tau > &0.0) || !tau.is_finite() {
                    return Err(Error::domain(format!("tau must be positive, got {tau}")));
                }
            }
        }
        Ok(())
    }

    /// For a fixed target: the noncentrality `||delta - delta0||^2 / (4 sigma^2)`
    /// that indexes the exact Pitman-closeness probability.
    pub fn pc_eta(&self) -> Option<f64> {
        match &self.target_rule {
            TargetRule::Fixed { delta0 } => Some(
                dist2_slices(self.delta.as_slice(), delta0.as_slice())
                    / (4.0 * self.sigma * self.sigma),
            ),
            _ => None,
        }
    }
}

/// The events whose probabilities the paper-level claims are about.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum EventKind {
    /// `||X - delta0|| > ||delta - delta0||`: the observed distance to the
    /// target overestimates the true one.
    B1c,
    /// Some factor in `[0, 1)` would strictly help: `h'(1) > 0`.
    B2c,
    /// The plain James–Stein estimate lands strictly closer to the truth.
    PcJs,
    /// The plus-rule estimate lands strictly closer to the truth.
    PcJsPlus,
    /// The plus-rule estimate lands strictly *farther* from the truth.
    ReverseHarm,
}

impl EventKind {
    pub fn label(&self) -> &'static str {
        match self {
            EventKind::B1c => "overestimates_distance",
            EventKind::B2c => "shrinkage_can_help",
            EventKind::PcJs => "pc_js",
            EventKind::PcJsPlus => "pc_js_plus",
            EventKind::ReverseHarm => "reverse_harm",
        }
    }

    fn needs_js(&self) -> bool {
        matches!(self, EventKind::PcJs | EventKind::PcJsPlus | EventKind::ReverseHarm)
    }
}

/// A quantity to estimate: an event probability or an estimator's MSE.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Metric {
    Event(EventKind),
    Mse(EstimatorKind),
}

impl Metric {
    pub fn label(&self) -> String {
        match self {
            Metric::Event(e) => e.label().to_string(),
            Metric::Mse(k) => format!("mse_{}", k.label()),
        }
    }

    fn needs_js(&self) -> bool {
        match self {
            Metric::Event(e) => e.needs_js(),
            Metric::Mse(k) => {
                matches!(k, EstimatorKind::JamesStein | EstimatorKind::JamesSteinPlus)
            }
        }
    }

    fn is_event(&self) -> bool {
        matches!(self, Metric::Event(_))
    }
}

/// `|| gamma (x - d0) + d0 - delta ||^2` without materializing the estimate.
#[inline]
fn shrink_err_norm2(x: &[f64], d0: &[f64], delta: &[f64], gamma: f64) -> f64 {
    let mut acc = CompensatedSum::new();
    for ((xi, d0i), di) in x.iter().zip(d0).zip(delta) {
        let e = gamma * (xi - d0i) + d0i - di;
        acc.add(e * e);
    }
    acc.value()
}

struct DrawCtx<'a> {
    x: &'a [f64],
    d0: &'a [f64],
    delta: &'a [f64],
    sigma: f64,
    dist2_x_delta: f64,
    dist2_x_d0: f64,
}

fn eval_metric(metric: &Metric, ctx: &DrawCtx) -> Result<f64> {
    let p = ctx.x.len();
    match metric {
        Metric::Event(event) => {
            let hit = match event {
                EventKind::B1c => ctx.dist2_x_d0 > dist2_slices(ctx.delta, ctx.d0),
                EventKind::B2c => geometry::h_prime_at_one_slices(ctx.x, ctx.delta, ctx.d0) > 0.0,
                EventKind::PcJs => {
                    if ctx.dist2_x_d0 == 0.0 {
                        return Err(Error::Singular("James-Stein rule at x == delta0"));
                    }
                    let gamma = js_factor(ctx.dist2_x_d0, ctx.sigma, p);
                    shrink_err_norm2(ctx.x, ctx.d0, ctx.delta, gamma) < ctx.dist2_x_delta
                }
                EventKind::PcJsPlus => {
                    geometry::js_plus_improves_slices(ctx.x, ctx.delta, ctx.d0, ctx.sigma)
                }
                EventKind::ReverseHarm => {
                    let gamma = js_plus_factor(ctx.dist2_x_d0, ctx.sigma, p);
                    shrink_err_norm2(ctx.x, ctx.d0, ctx.delta, gamma) > ctx.dist2_x_delta
                }
            };
            Ok(hit as u64 as f64)
        }
        Metric::Mse(kind) => match kind {
            EstimatorKind::Identity => Ok(ctx.dist2_x_delta),
            EstimatorKind::FixedGamma(g) => {
                Ok(shrink_err_norm2(ctx.x, ctx.d0, ctx.delta, g.value()))
            }
            EstimatorKind::JamesStein => {
                if ctx.dist2_x_d0 == 0.0 {
                    return Err(Error::Singular("James-Stein rule at x == delta0"));
                }
                let gamma = js_factor(ctx.dist2_x_d0, ctx.sigma, p);
                Ok(shrink_err_norm2(ctx.x, ctx.d0, ctx.delta, gamma))
            }
            EstimatorKind::JamesSteinPlus => {
                let gamma = js_plus_factor(ctx.dist2_x_d0, ctx.sigma, p);
                Ok(shrink_err_norm2(ctx.x, ctx.d0, ctx.delta, gamma))
            }
        },
    }
}

fn validate_run(spec: &ScenarioSpec, metrics: &[Metric], n: u64) -> Result<()> {
    spec.validate()?;
    if n == 0 {
        return Err(Error::domain("a Monte Carlo run needs n >= 1 draws"));
    }
    if metrics.is_empty() {
        return Err(Error::domain("at least one metric is required"));
    }
    if spec.p < 3 && metrics.iter().any(Metric::needs_js) {
        return Err(Error::domain(format!(
            "JS requires p >= 3, got p = {}",
            spec.p
        )));
    }
    Ok(())
}

/// Estimates all `metrics` on common draws, plus the paired differences
/// `metrics[i] - metrics[j]` for each `(i, j)` in `diffs`.
///
/// Per draw: `X ~ N(delta, sigma^2 I)`, then `delta0` per the target rule,
/// then every metric is evaluated on that pair. Events get binomial standard
/// errors; MSE metrics and all differences get the sample standard error.
pub fn run_scenario_with_diffs(
    spec: &ScenarioSpec,
    metrics: &[Metric],
    diffs: &[(usize, usize)],
    n: u64,
    seed: SeedSpec,
) -> Result<(Vec<MCResult>, Vec<MCResult>)> {
    validate_run(spec, metrics, n)?;
    for &(i, j) in diffs {
        if i >= metrics.len() || j >= metrics.len() {
            return Err(Error::domain(format!(
                "paired difference ({i}, {j}) is out of range for {} metrics",
                metrics.len()
            )));
        }
    }

    let p = spec.p;
    let n_metrics = metrics.len();

    struct ChunkOut {
        sums: Vec<(f64, f64)>,
        diff_sums: Vec<(f64, f64)>,
    }

    let chunks = run_chunks(n, seed, |draws, mut rng| {
        let mut x = vec![0.0; p];
        let mut d0 = vec![0.0; p];
        if let TargetRule::Fixed { delta0 } = &spec.target_rule {
            d0.copy_from_slice(delta0.as_slice());
        }
        let mut acc: Vec<(CompensatedSum, CompensatedSum)> =
            vec![Default::default(); n_metrics];
        let mut diff_acc: Vec<(CompensatedSum, CompensatedSum)> =
            vec![Default::default(); diffs.len()];
        let mut values = vec![0.0; n_metrics];

        for _ in 0..draws {
            fill_gaussian(&mut rng, spec.delta.as_slice(), spec.sigma, &mut x);
            match &spec.target_rule {
                TargetRule::Fixed { .. } => {}
                TargetRule::IndependentPrior { psi, tau } => {
                    fill_gaussian(&mut rng, psi.as_slice(), *tau, &mut d0);
                }
                TargetRule::DataCentered { tau } => {
                    fill_gaussian(&mut rng, &x, *tau, &mut d0);
                }
            }
            let ctx = DrawCtx {
                x: &x,
                d0: &d0,
                delta: spec.delta.as_slice(),
                sigma: spec.sigma,
                dist2_x_delta: dist2_slices(&x, spec.delta.as_slice()),
                dist2_x_d0: dist2_slices(&x, &d0),
            };
            for (value, metric) in values.iter_mut().zip(metrics) {
                *value = eval_metric(metric, &ctx)?;
            }
            for ((s, s2), v) in acc.iter_mut().zip(&values) {
                s.add(*v);
                s2.add(v * v);
            }
            for ((s, s2), &(i, j)) in diff_acc.iter_mut().zip(diffs) {
                let d = values[i] - values[j];
                s.add(d);
                s2.add(d * d);
            }
        }
        Ok(ChunkOut {
            sums: acc.iter().map(|(s, s2)| (s.value(), s2.value())).collect(),
            diff_sums: diff_acc
                .iter()
                .map(|(s, s2)| (s.value(), s2.value()))
                .collect(),
        })
    })?;

    // Sequential reduction in chunk order keeps the result worker-count
    // independent.
    let mut totals: Vec<(CompensatedSum, CompensatedSum)> = vec![Default::default(); n_metrics];
    let mut diff_totals: Vec<(CompensatedSum, CompensatedSum)> =
        vec![Default::default(); diffs.len()];
    for chunk in &chunks {
        for (t, (s, s2)) in totals.iter_mut().zip(&chunk.sums) {
            t.0.add(*s);
            t.1.add(*s2);
        }
        for (t, (s, s2)) in diff_totals.iter_mut().zip(&chunk.diff_sums) {
            t.0.add(*s);
            t.1.add(*s2);
        }
    }

    let results = totals
        .iter()
        .zip(metrics)
        .map(|((s, s2), metric)| {
            if metric.is_event() {
                // The sum of 0/1 values is an exact integer count.
                MCResult::from_binomial(s.value().round() as u64, n)
            } else {
                MCResult::from_moments(s.value(), s2.value(), n)
            }
        })
        .collect();
    let diff_results = diff_totals
        .iter()
        .map(|(s, s2)| MCResult::from_moments(s.value(), s2.value(), n))
        .collect();
    Ok((results, diff_results))
}

/// Estimates all `metrics` on common draws.
pub fn run_scenario(
    spec: &ScenarioSpec,
    metrics: &[Metric],
    n: u64,
    seed: SeedSpec,
) -> Result<Vec<MCResult>> {
    Ok(run_scenario_with_diffs(spec, metrics, &[], n, seed)?.0)
}

/// Estimates the probability of one event under the scenario.
pub fn estimate_event_prob(
    spec: &ScenarioSpec,
    event: EventKind,
    n: u64,
    seed: SeedSpec,
) -> Result<MCResult> {
    Ok(run_scenario(spec, &[Metric::Event(event)], n, seed)?.remove(0))
}

/// Estimates the mean squared error of one estimator under the scenario.
pub fn estimate_mse(
    spec: &ScenarioSpec,
    kind: EstimatorKind,
    n: u64,
    seed: SeedSpec,
) -> Result<MCResult> {
    Ok(run_scenario(spec, &[Metric::Mse(kind)], n, seed)?.remove(0))
}

/// Two metrics on common draws together with their paired difference
/// `first - second`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PairedComparison {
    pub first: MCResult,
    pub second: MCResult,
    pub diff: MCResult,
}

fn compare(
    spec: &ScenarioSpec,
    first: Metric,
    second: Metric,
    n: u64,
    seed: SeedSpec,
) -> Result<PairedComparison> {
    let (mut results, mut diffs) =
        run_scenario_with_diffs(spec, &[first, second], &[(0, 1)], n, seed)?;
    Ok(PairedComparison {
        first: results.remove(0),
        second: results.remove(0),
        diff: diffs.remove(0),
    })
}

/// MSE of two estimators on common draws, with the paired difference.
pub fn compare_mse(
    spec: &ScenarioSpec,
    first: EstimatorKind,
    second: EstimatorKind,
    n: u64,
    seed: SeedSpec,
) -> Result<PairedComparison> {
    compare(spec, Metric::Mse(first), Metric::Mse(second), n, seed)
}

/// Probabilities of two events on common draws, with the paired difference.
pub fn compare_event_prob(
    spec: &ScenarioSpec,
    first: EventKind,
    second: EventKind,
    n: u64,
    seed: SeedSpec,
) -> Result<PairedComparison> {
    compare(spec, Metric::Event(first), Metric::Event(second), n, seed)
}

/// Monte Carlo check of the conditional-mean identity: with the target
/// `delta0 ~ N(x, tau^2 I)`, the plus-rule estimate averages back to `x`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CondMeanCheck {
    /// `|| mean of estimates - x ||`.
    pub residual: f64,
    /// `4 sqrt( sum_i var_i / n )`: four standard errors of the residual.
    pub clt_bound: f64,
    pub n: u64,
}

/// Draws `delta0 ~ N(x, tau^2 I)` `n` times, averages the plus-rule
/// estimate, and reports the distance of the average from `x` together with
/// its CLT bound.
///
/// The estimate minus `x` equals `(1 - gamma(||v||)) v` with `v = delta0 - x`,
/// so the accumulation runs in offset coordinates; this loses no precision
/// and is exact for the antithetic variant.
pub fn conditional_mean_residual(
    x: &Point,
    tau: f64,
    sigma: f64,
    n: u64,
    seed: SeedSpec,
) -> Result<CondMeanCheck> {
    let p = x.dim();
    if p < 3 {
        return Err(Error::domain(format!("JS requires p >= 3, got p = {p}")));
    }
    if !(tau > 0.0) || !tau.is_finite() {
        return Err(Error::domain(format!("tau must be positive, got {tau}")));
    }
    if !(sigma > 0.0) || !sigma.is_finite() {
        return Err(Error::domain(format!("sigma must be positive, got {sigma}")));
    }
    if n == 0 {
        return Err(Error::domain("a Monte Carlo run needs n >= 1 draws"));
    }

    let zeros = vec![0.0; p];
    let chunks = run_chunks(n, seed, |draws, mut rng| {
        let mut v = vec![0.0; p];
        let mut acc: Vec<(CompensatedSum, CompensatedSum)> = vec![Default::default(); p];
        for _ in 0..draws {
            fill_gaussian(&mut rng, &zeros, tau, &mut v);
            let gamma = js_plus_factor(norm2_slice(&v), sigma, p);
            for ((s, s2), vi) in acc.iter_mut().zip(&v) {
                let w = (1.0 - gamma) * vi;
                s.add(w);
                s2.add(w * w);
            }
        }
        Ok(acc
            .iter()
            .map(|(s, s2)| (s.value(), s2.value()))
            .collect::<Vec<_>>())
    })?;

    let mut totals: Vec<(CompensatedSum, CompensatedSum)> = vec![Default::default(); p];
    for chunk in &chunks {
        for (t, (s, s2)) in totals.iter_mut().zip(chunk) {
            t.0.add(*s);
            t.1.add(*s2);
        }
    }

    let nf = n as f64;
    let mut mean_norm2 = CompensatedSum::new();
    let mut var_sum = CompensatedSum::new();
    for (s, s2) in &totals {
        let sum = s.value();
        let mean = sum / nf;
        mean_norm2.add(mean * mean);
        var_sum.add(((s2.value() - sum * sum / nf) / (nf - 1.0).max(1.0)).max(0.0));
    }
    Ok(CondMeanCheck {
        residual: mean_norm2.value().sqrt(),
        clt_bound: 4.0 * (var_sum.value() / nf).sqrt(),
        n,
    })
}

/// Antithetic version: targets are drawn in mirrored pairs `(x + v, x - v)`,
/// so each pair's average estimate is `x` exactly and the returned residual
/// is exactly zero. This is the symmetry argument behind the conditional
/// mean identity, made deterministic.
pub fn conditional_mean_residual_antithetic(
    x: &Point,
    tau: f64,
    sigma: f64,
    n_pairs: u64,
    seed: SeedSpec,
) -> Result<f64> {
    let p = x.dim();
    if p < 3 {
        return Err(Error::domain(format!("JS requires p >= 3, got p = {p}")));
    }
    if !(tau > 0.0) || !tau.is_finite() || !(sigma > 0.0) || !sigma.is_finite() {
        return Err(Error::domain("tau and sigma must be positive".to_string()));
    }
    if n_pairs == 0 {
        return Err(Error::domain("a Monte Carlo run needs n >= 1 pairs"));
    }

    let zeros = vec![0.0; p];
    let chunks = run_chunks(n_pairs, seed, |pairs, mut rng| {
        let mut v = vec![0.0; p];
        let mut acc: Vec<CompensatedSum> = vec![Default::default(); p];
        for _ in 0..pairs {
            fill_gaussian(&mut rng, &zeros, tau, &mut v);
            // gamma depends on v only through ||v||^2, which is identical
            // for v and -v, so the two offsets cancel exactly.
            let gamma = js_plus_factor(norm2_slice(&v), sigma, p);
            for (s, vi) in acc.iter_mut().zip(&v) {
                let w_plus = (1.0 - gamma) * vi;
                let w_minus = -w_plus;
                s.add(w_plus + w_minus);
            }
        }
        Ok(acc.iter().map(|s| s.value()).collect::<Vec<_>>())
    })?;

    let mut mean_norm2 = CompensatedSum::new();
    for coord in 0..p {
        let mut t = CompensatedSum::new();
        for chunk in &chunks {
            t.add(chunk[coord]);
        }
        let mean = t.value() / (2.0 * n_pairs as f64);
        mean_norm2.add(mean * mean);
    }
    Ok(mean_norm2.value().sqrt())
}

/// One row of a dimension sweep.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SweepRow {
    pub p: usize,
    pub estimate: f64,
    pub std_error: f64,
    pub n: u64,
}

/// The two asymptotic regimes the sweeps exercise.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum SweepPlan {
    /// Probability that the observed distance to an independently drawn
    /// target overestimates the true one: `delta0 ~ N(psi, tau^2 I)` with
    /// `psi = delta + psi_minus_delta * e1` and `tau = tau_over_sigma * sigma`.
    /// Tends to 1 as p grows.
    IndependentTarget {
        sigma: f64,
        tau_over_sigma: f64,
        psi_minus_delta: f64,
    },
    /// Probability that plus-rule shrinkage toward a data-centered target
    /// `delta0 ~ N(X, tau^2 I)` with `tau = sigma * p^epsilon` strictly
    /// hurts. Tends to 1 as p grows for `|epsilon| < 1/2`.
    DataCenteredHarm { sigma: f64, epsilon: f64 },
}

/// Runs one event estimate per dimension in `p_list` with identical `n`.
///
/// Each row uses its own stream (`seed.offset(row)`), so rows are
/// independent and the whole sweep is reproducible.
pub fn sweep_dimension(
    plan: &SweepPlan,
    p_list: &[usize],
    n: u64,
    seed: SeedSpec,
) -> Result<Vec<SweepRow>> {
    if p_list.is_empty() {
        return Err(Error::domain("sweep needs at least one dimension"));
    }
    if !p_list.windows(2).all(|w| w[0] < w[1]) {
        return Err(Error::domain("sweep dimensions must be strictly ascending"));
    }
    if n == 0 {
        return Err(Error::domain("a Monte Carlo run needs n >= 1 draws"));
    }
    match plan {
        SweepPlan::IndependentTarget {
            sigma,
            tau_over_sigma,
            psi_minus_delta,
        } => {
            if !(sigma > &0.0) || !(tau_over_sigma > &0.0) {
                return Err(Error::domain("sigma and tau/sigma must be positive".to_string()));
            }
            if !(psi_minus_delta >= &0.0) {
                return Err(Error::domain("||psi - delta|| must be >= 0".to_string()));
            }
        }
        SweepPlan::DataCenteredHarm { sigma, epsilon } => {
            if !(sigma > &0.0) {
                return Err(Error::domain("sigma must be positive".to_string()));
            }
            if !(epsilon.abs() < 0.5) {
                return Err(Error::domain(format!(
                    "harm sweep needs |epsilon| < 1/2, got {epsilon}"
                )));
            }
            if let Some(&p) = p_list.iter().find(|&&p| p < 3) {
                return Err(Error::domain(format!("JS requires p >= 3, got p = {p}")));
            }
        }
    }

    let mut rows = Vec::with_capacity(p_list.len());
    for (row, &p) in p_list.iter().enumerate() {
        let (spec, event) = match plan {
            SweepPlan::IndependentTarget {
                sigma,
                tau_over_sigma,
                psi_minus_delta,
            } => {
                let spec = ScenarioSpec {
                    p,
                    sigma: *sigma,
                    delta: Point::zeros(p),
                    target_rule: TargetRule::IndependentPrior {
                        psi: Point::axis(p, *psi_minus_delta)?,
                        tau: tau_over_sigma * sigma,
                    },
                };
                (spec, EventKind::B1c)
            }
            SweepPlan::DataCenteredHarm { sigma, epsilon } => {
                let spec = ScenarioSpec {
                    p,
                    sigma: *sigma,
                    delta: Point::zeros(p),
                    target_rule: TargetRule::DataCentered {
                        tau: sigma * (p as f64).powf(*epsilon),
                    },
                };
                (spec, EventKind::ReverseHarm)
            }
        };
        let r = estimate_event_prob(&spec, event, n, seed.offset(row as u64))?;
        rows.push(SweepRow {
            p,
            estimate: r.estimate,
            std_error: r.std_error,
            n,
        });
    }
    Ok(rows)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::estimators::ShrinkFactor;

    fn fixed_spec(p: usize, sigma: f64, dist: f64) -> ScenarioSpec {
        ScenarioSpec {
            p,
            sigma,
            delta: Point::zeros(p),
            target_rule: TargetRule::Fixed {
                delta0: Point::axis(p, dist).unwrap(),
            },
        }
    }

    #[test]
    fn b1c_is_certain_for_radius_zero_ball() {
        let spec = fixed_spec(4, 1.0, 0.0);
        let r = estimate_event_prob(&spec, EventKind::B1c, 10_000, SeedSpec::new(1, 0)).unwrap();
        assert_eq!(r.estimate, 1.0);
    }

    #[test]
    fn identity_mse_matches_p_sigma2() {
        // E ||X - delta||^2 = p sigma^2 = 12 here.
        let spec = fixed_spec(3, 2.0, 1.0);
        let r = estimate_mse(&spec, EstimatorKind::Identity, 200_000, SeedSpec::new(2, 0)).unwrap();
        assert!((r.estimate - 12.0).abs() < 4.0 * r.std_error, "estimate {}", r.estimate);
    }

    #[test]
    fn full_shrinkage_mse_is_target_distance() {
        // gamma = 0 pins the estimate at delta0, so the error is constant.
        let spec = fixed_spec(3, 1.0, 2.0);
        let kind = EstimatorKind::FixedGamma(ShrinkFactor::new(0.0).unwrap());
        let r = estimate_mse(&spec, kind, 1000, SeedSpec::new(3, 0)).unwrap();
        assert!((r.estimate - 4.0).abs() < 1e-10);
        assert!(r.std_error < 1e-12);
    }

    #[test]
    fn runs_are_deterministic() {
        let spec = fixed_spec(5, 1.0, 1.0);
        let seed = SeedSpec::new(42, 7);
        let a = estimate_event_prob(&spec, EventKind::PcJsPlus, 50_000, seed).unwrap();
        let b = estimate_event_prob(&spec, EventKind::PcJsPlus, 50_000, seed).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn results_do_not_depend_on_worker_count() {
        let spec = ScenarioSpec {
            p: 6,
            sigma: 1.5,
            delta: Point::zeros(6),
            target_rule: TargetRule::DataCentered { tau: 1.5 },
        };
        let seed = SeedSpec::new(11, 0);
        let metrics = [
            Metric::Event(EventKind::ReverseHarm),
            Metric::Mse(EstimatorKind::JamesSteinPlus),
        ];
        let run = |threads: usize| {
            let pool = rayon::ThreadPoolBuilder::new()
                .num_threads(threads)
                .build()
                .unwrap();
            pool.install(|| run_scenario(&spec, &metrics, 100_000, seed).unwrap())
        };
        let one = run(1);
        let eight = run(8);
        assert_eq!(one, eight);
    }

    #[test]
    fn paired_comparison_shares_draws() {
        // On common draws the plus rule never loses to the plain rule, so
        // every paired MSE difference is >= 0 and the mean difference is too.
        let spec = fixed_spec(5, 1.0, 1.0);
        let c = compare_mse(
            &spec,
            EstimatorKind::JamesStein,
            EstimatorKind::JamesSteinPlus,
            50_000,
            SeedSpec::new(4, 0),
        )
        .unwrap();
        assert!(c.diff.estimate >= 0.0);
        assert!(c.first.estimate >= c.second.estimate);
    }

    #[test]
    fn ci_is_symmetric_about_estimate() {
        let spec = fixed_spec(3, 1.0, 1.0);
        let r = estimate_event_prob(&spec, EventKind::PcJs, 10_000, SeedSpec::new(5, 0)).unwrap();
        assert!((r.ci95_high + r.ci95_low - 2.0 * r.estimate).abs() < 1e-12);
        assert!((r.ci95_high - r.estimate - 1.96 * r.std_error).abs() < 1e-12);
    }

    #[test]
    fn validation_errors() {
        let spec = fixed_spec(2, 1.0, 1.0);
        // JS events need p >= 3.
        assert!(estimate_event_prob(&spec, EventKind::PcJs, 10, SeedSpec::new(0, 0)).is_err());
        // B1c does not.
        assert!(estimate_event_prob(&spec, EventKind::B1c, 10, SeedSpec::new(0, 0)).is_ok());
        // n = 0 rejected.
        assert!(estimate_event_prob(&spec, EventKind::B1c, 0, SeedSpec::new(0, 0)).is_err());
    }

    #[test]
    fn antithetic_residual_is_exactly_zero() {
        let x = Point::new(vec![1.0, 2.0, 3.0]).unwrap();
        let r = conditional_mean_residual_antithetic(&x, 2.0, 1.0, 10_000, SeedSpec::new(6, 0))
            .unwrap();
        assert_eq!(r, 0.0);
    }

    #[test]
    fn conditional_mean_residual_tiny_tau() {
        // tau -> 0: every target lands inside the truncation ball, gamma = 0,
        // the estimate is delta0 ~= x, and the residual collapses.
        let x = Point::new(vec![1.0, 2.0, 3.0]).unwrap();
        let r = conditional_mean_residual(&x, 1e-12, 1.0, 1000, SeedSpec::new(7, 0)).unwrap();
        assert!(r.residual < 1e-12);
    }

    #[test]
    fn sweep_validation() {
        let plan = SweepPlan::DataCenteredHarm {
            sigma: 1.0,
            epsilon: 0.0,
        };
        let seed = SeedSpec::new(0, 0);
        assert!(sweep_dimension(&plan, &[8, 4], 10, seed).is_err());
        assert!(sweep_dimension(&plan, &[], 10, seed).is_err());
        assert!(sweep_dimension(&plan, &[4, 8], 0, seed).is_err());
        assert!(sweep_dimension(&plan, &[2, 4], 10, seed).is_err());
        let bad_eps = SweepPlan::DataCenteredHarm {
            sigma: 1.0,
            epsilon: 0.5,
        };
        assert!(sweep_dimension(&bad_eps, &[4, 8], 10, seed).is_err());
        assert!(sweep_dimension(&plan, &[4, 8], 100, seed).is_ok());
    }

    #[test]
    fn scenario_json_round_trip_rejects_unknown_fields() {
        let json = r#"{
            "p": 3,
            "sigma": 2400.0,
            "delta": [0.0, 0.0, 0.0],
            "target_rule": {"kind": "data_centered", "tau": 2400.0}
        }"#;
        let spec: ScenarioSpec = serde_json::from_str(json).unwrap();
        assert_eq!(spec.p, 3);
        spec.validate().unwrap();

        let bad = r#"{
            "p": 3,
            "sigma": 1.0,
            "delta": [0.0, 0.0, 0.0],
            "target_rule": {"kind": "data_centered", "tau": 1.0},
            "extra": 1
        }"#;
        let err = serde_json::from_str::<ScenarioSpec>(bad).unwrap_err();
        assert!(err.to_string().contains("extra"));
    }
}
