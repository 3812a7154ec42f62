//! Builders for each subcommand: resolve arguments, run the library, and
//! lay out the output table.

use serde::{Deserialize, Serialize};

use steinlab::dist::{pc_exact_js, PCQuery};
use steinlab::estimators::EstimatorKind;
use steinlab::geometry;
use steinlab::montecarlo::{
    run_scenario, sweep_dimension, EventKind, Metric, ScenarioSpec, SweepPlan, TargetRule,
};
use steinlab::point::Point;
use steinlab::rng::SeedSpec;
use steinlab::selfcheck;
use steinlab::symmetry::{run_battery, BatteryConfig, SamplerKind, SymmetrySampler};

use crate::output::{Cell, Provenance, Table};
use crate::{CliError, Command};

pub struct Built {
    pub table: Table,
    pub provenance: Provenance,
    pub verdict_failed: bool,
}

pub fn build(cmd: &Command) -> Result<Built, CliError> {
    match cmd {
        Command::Exact { p, dist, common } => exact(p, dist, common.seed),
        Command::Simulate { config, common } => simulate(config, common.n, common.seed),
        Command::RegionGrid {
            figure,
            p,
            sigma,
            x_dist,
            target_dist,
            window,
            res,
            common,
        } => region_grid(figure, *p, *sigma, *x_dist, *target_dist, *window, *res, common.seed),
        Command::Sweep {
            prop,
            p_list,
            sigma,
            tau_ratio,
            psi_dist,
            epsilon,
            common,
        } => sweep(prop, p_list, *sigma, *tau_ratio, *psi_dist, *epsilon, common.n, common.seed),
        Command::SymmetryCheck {
            sampler,
            p,
            halfspaces,
            cones,
            sigma,
            scales,
            shift,
            significance,
            common,
        } => symmetry_check(
            sampler,
            *p,
            *halfspaces,
            *cones,
            *sigma,
            scales.as_deref(),
            *shift,
            *significance,
            common.n,
            common.seed,
        ),
        Command::Selfcheck { common } => run_selfcheck(common.seed),
    }
}

// ---------------------------------------------------------------------------
// Argument parsing helpers.
// ---------------------------------------------------------------------------

/// Parses "7", "3,5,10", or an inclusive range "3..50".
fn parse_usize_list(s: &str, flag: &str) -> Result<Vec<usize>, CliError> {
    let bad = |detail: &str| CliError::usage(format!("{flag}: {detail} (got {s:?})"));
    if let Some((lo, hi)) = s.split_once("..") {
        let lo: usize = lo
            .trim()
            .parse()
            .map_err(|_| bad("range start is not an integer"))?;
        let hi: usize = hi
            .trim()
            .parse()
            .map_err(|_| bad("range end is not an integer"))?;
        if lo > hi {
            return Err(bad("range start exceeds range end"));
        }
        return Ok((lo..=hi).collect());
    }
    s.split(',')
        .map(|part| {
            part.trim()
                .parse::<usize>()
                .map_err(|_| bad("expected an integer or comma list of integers"))
        })
        .collect()
}

fn parse_f64_list(s: &str, flag: &str) -> Result<Vec<f64>, CliError> {
    s.split(',')
        .map(|part| {
            part.trim().parse::<f64>().map_err(|_| {
                CliError::usage(format!(
                    "{flag}: expected a number or comma list of numbers (got {s:?})"
                ))
            })
        })
        .collect()
}

// ---------------------------------------------------------------------------
// exact
// ---------------------------------------------------------------------------

#[derive(Serialize)]
struct ExactConfig<'a> {
    p: &'a [usize],
    dist_over_sigma: &'a [f64],
    seed: u64,
}

fn exact(p_arg: &str, dist_arg: &str, seed: u64) -> Result<Built, CliError> {
    let ps = parse_usize_list(p_arg, "--p")?;
    let dists = parse_f64_list(dist_arg, "--dist")?;
    if ps.is_empty() || dists.is_empty() {
        return Err(CliError::usage("--p and --dist must be nonempty"));
    }
    if let Some(bad) = dists.iter().find(|d| !(**d >= 0.0)) {
        return Err(CliError::usage(format!(
            "--dist: distances must be >= 0 (got {bad})"
        )));
    }

    let mut table = Table::new(vec!["p", "eta", "pc_exact"]);
    for &p in &ps {
        for &d in &dists {
            let eta = d * d / 4.0;
            let query = PCQuery::new(p, eta).map_err(CliError::from)?;
            let pc = pc_exact_js(query).map_err(CliError::from)?;
            table.push(vec![Cell::Int(p as u64), Cell::Float(eta), Cell::Float(pc)]);
        }
    }
    let config_json = serde_json::to_string(&ExactConfig {
        p: &ps,
        dist_over_sigma: &dists,
        seed,
    })
    .expect("serializable");
    Ok(Built {
        table,
        provenance: Provenance {
            command: "exact",
            config_json,
            master_seed: seed,
        },
        verdict_failed: false,
    })
}

// ---------------------------------------------------------------------------
// simulate
// ---------------------------------------------------------------------------

/// The scenario config file: the scenario fields plus an optional list of
/// metric names. Unknown fields are rejected.
#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct SimulateConfig {
    p: usize,
    sigma: f64,
    delta: Point,
    target_rule: TargetRule,
    #[serde(skip_serializing_if = "Option::is_none")]
    metrics: Option<Vec<String>>,
}

fn metric_from_name(name: &str) -> Result<Metric, CliError> {
    Ok(match name {
        "overestimates_distance" => Metric::Event(EventKind::B1c),
        "shrinkage_can_help" => Metric::Event(EventKind::B2c),
        "pc_js" => Metric::Event(EventKind::PcJs),
        "pc_js_plus" => Metric::Event(EventKind::PcJsPlus),
        "reverse_harm" => Metric::Event(EventKind::ReverseHarm),
        "mse_identity" => Metric::Mse(EstimatorKind::Identity),
        "mse_js" => Metric::Mse(EstimatorKind::JamesStein),
        "mse_js_plus" => Metric::Mse(EstimatorKind::JamesSteinPlus),
        other => {
            return Err(CliError::usage(format!(
                "unknown metric {other:?}; valid: overestimates_distance, shrinkage_can_help, \
                 pc_js, pc_js_plus, reverse_harm, mse_identity, mse_js, mse_js_plus"
            )))
        }
    })
}

fn default_metrics(p: usize) -> Vec<Metric> {
    let mut m = vec![
        Metric::Event(EventKind::B1c),
        Metric::Event(EventKind::B2c),
        Metric::Mse(EstimatorKind::Identity),
    ];
    if p >= 3 {
        m.extend([
            Metric::Event(EventKind::PcJs),
            Metric::Event(EventKind::PcJsPlus),
            Metric::Event(EventKind::ReverseHarm),
            Metric::Mse(EstimatorKind::JamesStein),
            Metric::Mse(EstimatorKind::JamesSteinPlus),
        ]);
    }
    m
}

#[derive(Serialize)]
struct ResolvedSimulateConfig<'a> {
    #[serde(flatten)]
    config: &'a SimulateConfig,
    n: u64,
    seed: u64,
}

fn simulate(config_path: &std::path::Path, n: u64, seed: u64) -> Result<Built, CliError> {
    let raw = if config_path.as_os_str() == "-" {
        use std::io::Read;
        let mut buf = String::new();
        std::io::stdin()
            .read_to_string(&mut buf)
            .map_err(|e| CliError::usage(format!("failed to read stdin: {e}")))?;
        buf
    } else {
        std::fs::read_to_string(config_path).map_err(|e| {
            CliError::usage(format!("cannot read config {}: {e}", config_path.display()))
        })?
    };
    let config: SimulateConfig = serde_json::from_str(&raw)
        .map_err(|e| CliError::usage(format!("invalid scenario config: {e}")))?;

    let spec = ScenarioSpec {
        p: config.p,
        sigma: config.sigma,
        delta: config.delta.clone(),
        target_rule: config.target_rule.clone(),
    };
    spec.validate().map_err(CliError::from)?;

    let metrics: Vec<Metric> = match &config.metrics {
        Some(names) => names
            .iter()
            .map(|s| metric_from_name(s))
            .collect::<Result<_, _>>()?,
        None => default_metrics(config.p),
    };

    let results = run_scenario(&spec, &metrics, n, SeedSpec::new(seed, 0)).map_err(CliError::from)?;

    // The exact PC value sits beside the pc_js row whenever the target is
    // fixed, for one-glance comparison.
    let exact_pc = match spec.pc_eta() {
        Some(eta) if spec.p >= 3 => Some(pc_exact_js(PCQuery::new(spec.p, eta).map_err(CliError::from)?).map_err(CliError::from)?),
        _ => None,
    };

    let mut table = Table::new(vec![
        "metric", "estimate", "se", "ci_low", "ci_high", "n", "exact",
    ]);
    for (metric, r) in metrics.iter().zip(&results) {
        let exact = match (metric, exact_pc) {
            (Metric::Event(EventKind::PcJs), Some(v)) => Cell::Float(v),
            _ => Cell::Empty,
        };
        table.push(vec![
            Cell::Text(metric.label()),
            Cell::Float(r.estimate),
            Cell::Float(r.std_error),
            Cell::Float(r.ci95_low),
            Cell::Float(r.ci95_high),
            Cell::Int(r.n),
            exact,
        ]);
    }

    let config_json = serde_json::to_string(&ResolvedSimulateConfig {
        config: &config,
        n,
        seed,
    })
    .expect("serializable");
    Ok(Built {
        table,
        provenance: Provenance {
            command: "simulate",
            config_json,
            master_seed: seed,
        },
        verdict_failed: false,
    })
}

// ---------------------------------------------------------------------------
// region-grid
// ---------------------------------------------------------------------------

#[derive(Serialize)]
struct RegionConfig<'a> {
    figure: &'a str,
    p: usize,
    sigma: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    x_dist: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    target_dist: Option<f64>,
    window: f64,
    res: usize,
    seed: u64,
}

/// Embeds a slice point (u, v) into R^p as (u, v, 0, ..., 0).
///
/// Every region here is rotation-invariant about the axis through the two
/// anchor points, so the planar slice loses nothing.
fn embed(u: f64, v: f64, p: usize) -> Vec<f64> {
    let mut x = vec![0.0; p];
    x[0] = u;
    if p > 1 {
        x[1] = v;
    }
    x
}

#[allow(clippy::too_many_arguments)]
fn region_grid(
    figure: &str,
    p: usize,
    sigma: f64,
    x_dist: Option<f64>,
    target_dist: Option<f64>,
    window: Option<f64>,
    res: usize,
    seed: u64,
) -> Result<Built, CliError> {
    if res < 2 {
        return Err(CliError::usage("--res must be at least 2"));
    }
    if !(sigma > 0.0) {
        return Err(CliError::usage(format!("--sigma must be positive (got {sigma})")));
    }

    let need_x = |x_dist: Option<f64>| -> Result<f64, CliError> {
        match x_dist {
            Some(v) if v > 0.0 => Ok(v),
            Some(v) => Err(CliError::usage(format!("--x-dist must be positive (got {v})"))),
            None => Err(CliError::usage(format!("--figure {figure} requires --x-dist"))),
        }
    };
    let need_target = |target_dist: Option<f64>| -> Result<f64, CliError> {
        match target_dist {
            Some(v) if v > 0.0 => Ok(v),
            Some(v) => Err(CliError::usage(format!("--target-dist must be positive (got {v})"))),
            None => Err(CliError::usage(format!("--figure {figure} requires --target-dist"))),
        }
    };
    let need_p3 = || -> Result<(), CliError> {
        if p < 3 {
            Err(CliError::usage(format!("--figure {figure} requires --p >= 3 (got {p})")))
        } else {
            Ok(())
        }
    };

    // delta sits at the origin of the slice; the u axis points at the other
    // anchor (X for figures 2-3, delta0 for figures 1 and 4).
    let half_radius = sigma * ((p as f64 - 2.0).max(0.0)).sqrt() / 2.0;
    let (anchor, legend): (f64, &str) = match figure {
        "fig1" => {
            let t = need_target(target_dist)?;
            (t, "bits: 1 = in ball B1 (around the target), 2 = in ball B2 (around the midpoint)")
        }
        "fig2" => {
            let x = need_x(x_dist)?;
            (x, "bits: 1 = shrinking toward this target can help (complement of the halfspace H)")
        }
        "fig3a" | "fig3b" => {
            need_p3()?;
            let x = need_x(x_dist)?;
            if figure == "fig3a" && !(x < half_radius) {
                return Err(CliError::usage(format!(
                    "--figure fig3a requires ||X - delta|| < sigma*sqrt(p-2)/2 (got {x} >= {half_radius})"
                )));
            }
            if figure == "fig3b" && !(x > half_radius) {
                return Err(CliError::usage(format!(
                    "--figure fig3b requires ||X - delta|| > sigma*sqrt(p-2)/2 (got {x} <= {half_radius})"
                )));
            }
            (x, "bits: 1 = inside truncation ball, 2 = in ball B, 4 = in halfspace K, 8 = plus-rule shrinkage improves")
        }
        "fig4a" | "fig4b" => {
            need_p3()?;
            let t = need_target(target_dist)?;
            if figure == "fig4a" && !(t < half_radius) {
                return Err(CliError::usage(format!(
                    "--figure fig4a requires ||delta0 - delta|| < sigma*sqrt(p-2)/2 (got {t} >= {half_radius})"
                )));
            }
            if figure == "fig4b" && !(t > half_radius) {
                return Err(CliError::usage(format!(
                    "--figure fig4b requires ||delta0 - delta|| > sigma*sqrt(p-2)/2 (got {t} <= {half_radius})"
                )));
            }
            (t, "bits: 1 = plus rule improves (C), 2 = plain rule improves (D), 4 = in truncation ball B1, 8 = in ball B2")
        }
        other => {
            return Err(CliError::usage(format!(
                "--figure must be one of fig1, fig2, fig3a, fig3b, fig4a, fig4b (got {other:?})"
            )))
        }
    };

    let trunc_radius = 2.0 * half_radius;
    let w = window.unwrap_or_else(|| {
        let base = match figure {
            "fig1" | "fig2" => anchor,
            _ => anchor.max(trunc_radius),
        };
        2.5 * base
    });
    if !(w > 0.0) {
        return Err(CliError::usage(format!("--window must be positive (got {w})")));
    }

    let delta = Point::zeros(p.max(2));
    let p_eff = p.max(2); // figures 1 and 2 are dimension-free; evaluate in the plane
    let mut table = Table::new(vec!["u", "v", "label_flags"]);
    table.note(format!("{figure} {legend}"));

    let step = 2.0 * w / (res as f64 - 1.0);
    for i in 0..res {
        let v = -w + step * i as f64;
        for j in 0..res {
            let u = -w + step * j as f64;
            let flags = match figure {
                "fig1" => {
                    let x = Point::new(embed(u, v, p_eff)).expect("finite");
                    let d0 = Point::new(embed(anchor, 0.0, p_eff)).expect("finite");
                    let in_b1 = !geometry::overestimates_distance(&x, &delta, &d0)
                        .map_err(CliError::from)?;
                    let in_b2 =
                        !geometry::shrinkage_can_help(&x, &delta, &d0).map_err(CliError::from)?;
                    (in_b1 as u64) | ((in_b2 as u64) << 1)
                }
                "fig2" => {
                    let x = Point::new(embed(anchor, 0.0, p_eff)).expect("finite");
                    let d0 = Point::new(embed(u, v, p_eff)).expect("finite");
                    geometry::target_can_help(&d0, &x, &delta).map_err(CliError::from)? as u64
                }
                "fig3a" | "fig3b" => {
                    let x = Point::new(embed(anchor, 0.0, p)).expect("finite");
                    let d0 = Point::new(embed(u, v, p)).expect("finite");
                    let delta_p = Point::zeros(p);
                    let label = geometry::classify_target(&d0, &x, &delta_p, sigma)
                        .map_err(CliError::from)?;
                    (label.inside_truncation_ball as u64)
                        | ((label.in_ball_b as u64) << 1)
                        | ((label.in_halfspace_k as u64) << 2)
                        | ((label.improves as u64) << 3)
                }
                _ => {
                    // fig4a / fig4b: grid point is the observation.
                    let x = Point::new(embed(u, v, p)).expect("finite");
                    let d0 = Point::new(embed(anchor, 0.0, p)).expect("finite");
                    let delta_p = Point::zeros(p);
                    match geometry::appc_membership(&x, &delta_p, &d0, sigma) {
                        Ok(m) => {
                            (m.in_c as u64)
                                | ((m.in_d as u64) << 1)
                                | ((m.in_trunc_b1 as u64) << 2)
                                | ((m.in_dom_b2 as u64) << 3)
                        }
                        Err(steinlab::Error::Singular(_)) => {
                            // The grid cell exactly at the target: the plain
                            // rule is undefined there; the plus rule pins the
                            // estimate to the target and nothing improves.
                            1 << 2
                        }
                        Err(e) => return Err(CliError::from(e)),
                    }
                }
            };
            table.push(vec![Cell::Float(u), Cell::Float(v), Cell::Int(flags)]);
        }
    }

    let config_json = serde_json::to_string(&RegionConfig {
        figure,
        p,
        sigma,
        x_dist,
        target_dist,
        window: w,
        res,
        seed,
    })
    .expect("serializable");
    Ok(Built {
        table,
        provenance: Provenance {
            command: "region-grid",
            config_json,
            master_seed: seed,
        },
        verdict_failed: false,
    })
}

// ---------------------------------------------------------------------------
// sweep
// ---------------------------------------------------------------------------

#[derive(Serialize)]
struct SweepConfig<'a> {
    prop: &'a str,
    p_list: &'a [usize],
    sigma: f64,
    tau_ratio: f64,
    psi_dist: f64,
    epsilon: f64,
    threshold: f64,
    n: u64,
    seed: u64,
}

#[allow(clippy::too_many_arguments)]
fn sweep(
    prop: &str,
    p_list_arg: &str,
    sigma: f64,
    tau_ratio: f64,
    psi_dist: f64,
    epsilon: f64,
    n: u64,
    seed: u64,
) -> Result<Built, CliError> {
    let p_list = parse_usize_list(p_list_arg, "--p-list")?;
    let (plan, threshold) = match prop {
        "prop2" => (
            SweepPlan::IndependentTarget {
                sigma,
                tau_over_sigma: tau_ratio,
                psi_minus_delta: psi_dist,
            },
            0.99,
        ),
        "prop3" => (SweepPlan::DataCenteredHarm { sigma, epsilon }, 0.95),
        other => {
            return Err(CliError::usage(format!(
                "--prop must be prop2 or prop3 (got {other:?})"
            )))
        }
    };

    let rows = sweep_dimension(&plan, &p_list, n, SeedSpec::new(seed, 0)).map_err(CliError::from)?;

    let monotone = rows.windows(2).all(|w| {
        let joint = (w[0].std_error.powi(2) + w[1].std_error.powi(2)).sqrt();
        w[1].estimate - w[0].estimate >= -4.0 * joint
    });
    let final_est = rows.last().expect("nonempty").estimate;
    let final_ok = final_est >= threshold;

    let mut table = Table::new(vec!["p", "estimate", "se", "n"]);
    for r in &rows {
        table.push(vec![
            Cell::Int(r.p as u64),
            Cell::Float(r.estimate),
            Cell::Float(r.std_error),
            Cell::Int(r.n),
        ]);
    }
    table.note(format!(
        "verdict: monotone_within_se={} final={} threshold={} threshold_met={}",
        if monotone { "yes" } else { "no" },
        final_est,
        threshold,
        if final_ok { "yes" } else { "no" }
    ));

    let config_json = serde_json::to_string(&SweepConfig {
        prop,
        p_list: &p_list,
        sigma,
        tau_ratio,
        psi_dist,
        epsilon,
        threshold,
        n,
        seed,
    })
    .expect("serializable");
    Ok(Built {
        table,
        provenance: Provenance {
            command: "sweep",
            config_json,
            master_seed: seed,
        },
        verdict_failed: !(monotone && final_ok),
    })
}

// ---------------------------------------------------------------------------
// symmetry-check
// ---------------------------------------------------------------------------

#[derive(Serialize)]
struct SymmetryConfig<'a> {
    sampler: &'a str,
    p: usize,
    halfspaces: usize,
    cones: usize,
    #[serde(skip_serializing_if = "Option::is_none")]
    sigma: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    scales: Option<Vec<f64>>,
    #[serde(skip_serializing_if = "Option::is_none")]
    shift: Option<f64>,
    significance: f64,
    n: u64,
    seed: u64,
}

#[allow(clippy::too_many_arguments)]
fn symmetry_check(
    sampler: &str,
    p: usize,
    halfspaces: usize,
    cones: usize,
    sigma: f64,
    scales: Option<&str>,
    shift: f64,
    significance: f64,
    n: u64,
    seed: u64,
) -> Result<Built, CliError> {
    let parsed_scales = scales
        .map(|s| parse_f64_list(s, "--scales"))
        .transpose()?;
    let (kind, cfg_sigma, cfg_scales, cfg_shift) = match sampler {
        "spherical-gaussian" => (
            SamplerKind::SphericalGaussian { sigma },
            Some(sigma),
            None,
            None,
        ),
        "elliptical" => {
            let scales = parsed_scales.clone().unwrap_or_else(|| {
                // Default spreads the axes 1..=p.
                (1..=p).map(|i| i as f64).collect()
            });
            (
                SamplerKind::Elliptical {
                    scales: scales.clone(),
                },
                None,
                Some(scales),
                None,
            )
        }
        "directional-only" => (SamplerKind::DirectionalOnly, None, None, None),
        "asymmetric-control" => (
            SamplerKind::AsymmetricControl { shift },
            None,
            None,
            Some(shift),
        ),
        other => {
            return Err(CliError::usage(format!(
                "--sampler must be one of spherical-gaussian, elliptical, directional-only, \
                 asymmetric-control (got {other:?})"
            )))
        }
    };
    let s = SymmetrySampler::new(kind, p).map_err(CliError::from)?;
    let cfg = BatteryConfig {
        halfspaces,
        cones,
        n,
        significance,
    };
    let rows = run_battery(&s, &cfg, SeedSpec::new(seed, 0)).map_err(CliError::from)?;

    let failures = rows.iter().filter(|r| !r.pass).count();
    let mut table = Table::new(vec![
        "test",
        "estimate",
        "estimate_neg",
        "z",
        "p_value",
        "pass",
        "n",
    ]);
    for r in &rows {
        table.push(vec![
            Cell::Text(r.test.clone()),
            Cell::Float(r.estimate),
            r.estimate_neg.map_or(Cell::Empty, Cell::Float),
            Cell::Float(r.statistic),
            Cell::Float(r.p_value),
            Cell::Bool(r.pass),
            Cell::Int(r.n),
        ]);
    }
    table.note(format!(
        "verdict: all_pass={} ({} of {} tests failed at level {})",
        if failures == 0 { "yes" } else { "no" },
        failures,
        rows.len(),
        significance
    ));

    let config_json = serde_json::to_string(&SymmetryConfig {
        sampler,
        p,
        halfspaces,
        cones,
        sigma: cfg_sigma,
        scales: cfg_scales,
        shift: cfg_shift,
        significance,
        n,
        seed,
    })
    .expect("serializable");
    Ok(Built {
        table,
        provenance: Provenance {
            command: "symmetry-check",
            config_json,
            master_seed: seed,
        },
        verdict_failed: failures > 0,
    })
}

// ---------------------------------------------------------------------------
// selfcheck
// ---------------------------------------------------------------------------

#[derive(Serialize)]
struct SelfcheckConfig {
    seed: u64,
}

fn run_selfcheck(seed: u64) -> Result<Built, CliError> {
    let reports = selfcheck::run_all(seed);
    let failures = reports.iter().filter(|r| !r.pass).count();

    let mut table = Table::new(vec!["criterion", "pass", "name", "detail"]);
    for r in &reports {
        table.push(vec![
            Cell::Int(r.id as u64),
            Cell::Bool(r.pass),
            Cell::Text(r.name.to_string()),
            Cell::Text(r.detail.replace(',', ";")),
        ]);
    }
    table.note(format!(
        "verdict: {} of {} criteria passed",
        reports.len() - failures,
        reports.len()
    ));

    let config_json = serde_json::to_string(&SelfcheckConfig { seed }).expect("serializable");
    Ok(Built {
        table,
        provenance: Provenance {
            command: "selfcheck",
            config_json,
            master_seed: seed,
        },
        verdict_failed: failures > 0,
    })
}
