//! Command-line harness: scenario configs in, deterministic CSV/JSON out.
//!
//! Exit codes: 0 success, 2 usage or configuration error, 3 numerical
//! convergence failure, 4 failed verdict under `--check`.

// Domain checks are written `!(x > 0.0)` on purpose: NaN must fail them.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

mod commands;
mod output;

use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};

use output::Format;

#[derive(Debug, Parser)]
#[command(name = "steinlab", version, about = "Shrinkage estimation: exact tables, simulations, region grids, sweeps, and the acceptance selfcheck")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
enum FormatArg {
    Csv,
    Json,
}

#[derive(Debug, Args)]
struct Common {
    /// Master seed for every random stream of the run.
    #[arg(long, default_value_t = 0)]
    seed: u64,

    /// Monte Carlo draws per estimate (ignored by exact/region-grid).
    #[arg(long, default_value_t = 100_000)]
    n: u64,

    /// Worker threads (0 = one per core). Changes wall time, never bytes.
    #[arg(long, default_value_t = 0)]
    workers: usize,

    /// Output format; both carry identical numeric content.
    #[arg(long, value_enum, default_value_t = FormatArg::Csv)]
    format: FormatArg,

    /// Output path (stdout when omitted).
    #[arg(long)]
    out: Option<PathBuf>,

    /// Exit with code 4 if any verdict in the output failed.
    #[arg(long)]
    check: bool,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Exact Pitman-closeness probabilities over a (p, distance) grid.
    Exact {
        /// Dimensions: a value, comma list, or inclusive range like 3..50.
        #[arg(long)]
        p: String,
        /// Target distances ||delta - delta0|| in sigma units, comma list.
        #[arg(long)]
        dist: String,
        #[command(flatten)]
        common: Common,
    },
    /// Monte Carlo metrics for a scenario described by a JSON config file.
    Simulate {
        /// Path to the scenario JSON ("-" reads stdin).
        #[arg(long)]
        config: PathBuf,
        #[command(flatten)]
        common: Common,
    },
    /// Planar (u, v, label_flags) grid reproducing one of the region figures.
    RegionGrid {
        /// One of: fig1, fig2, fig3a, fig3b, fig4a, fig4b.
        #[arg(long)]
        figure: String,
        /// Ambient dimension (figures 3 and 4 need p >= 3).
        #[arg(long, default_value_t = 3)]
        p: usize,
        /// Noise scale.
        #[arg(long, default_value_t = 1.0)]
        sigma: f64,
        /// ||X - delta||, required by fig2/fig3a/fig3b.
        #[arg(long)]
        x_dist: Option<f64>,
        /// ||delta0 - delta||, required by fig1/fig4a/fig4b.
        #[arg(long)]
        target_dist: Option<f64>,
        /// Half-width of the grid window (derived from the geometry when omitted).
        #[arg(long)]
        window: Option<f64>,
        /// Grid points per axis.
        #[arg(long, default_value_t = 101)]
        res: usize,
        #[command(flatten)]
        common: Common,
    },
    /// Dimension sweep toward one of the two large-p regimes.
    Sweep {
        /// prop2 (independent target, overestimation -> 1) or prop3
        /// (data-centered target, harm -> 1).
        #[arg(long)]
        prop: String,
        /// Ascending dimensions, comma list or inclusive range.
        #[arg(long)]
        p_list: String,
        #[arg(long, default_value_t = 1.0)]
        sigma: f64,
        /// tau / sigma for prop2.
        #[arg(long, default_value_t = 1.0)]
        tau_ratio: f64,
        /// ||psi - delta|| for prop2.
        #[arg(long, default_value_t = 0.0)]
        psi_dist: f64,
        /// Exponent in tau = sigma * p^epsilon for prop3; |epsilon| < 1/2.
        #[arg(long, default_value_t = 0.0)]
        epsilon: f64,
        #[command(flatten)]
        common: Common,
    },
    /// Sampled battery of directional-symmetry tests.
    SymmetryCheck {
        /// One of: spherical-gaussian, elliptical, directional-only,
        /// asymmetric-control.
        #[arg(long)]
        sampler: String,
        #[arg(long, default_value_t = 3)]
        p: usize,
        /// Random central halfspaces to test.
        #[arg(long, default_value_t = 32)]
        halfspaces: usize,
        /// Random rotated-orthant cones to test.
        #[arg(long, default_value_t = 8)]
        cones: usize,
        /// Scale of the spherical Gaussian sampler.
        #[arg(long, default_value_t = 1.0)]
        sigma: f64,
        /// Axis scales for the elliptical sampler, comma list of length p.
        #[arg(long)]
        scales: Option<String>,
        /// Mean shift of the asymmetric control sampler.
        #[arg(long, default_value_t = 1.0)]
        shift: f64,
        /// Per-test significance level.
        #[arg(long, default_value_t = 1e-3)]
        significance: f64,
        #[command(flatten)]
        common: Common,
    },
    /// Run the full acceptance checklist (criteria pin their own sample sizes).
    Selfcheck {
        #[command(flatten)]
        common: Common,
    },
}

/// A command failure carrying its exit code.
pub struct CliError {
    pub code: i32,
    pub message: String,
}

impl CliError {
    pub fn usage(message: impl Into<String>) -> Self {
        CliError {
            code: 2,
            message: message.into(),
        }
    }
}

impl From<steinlab::Error> for CliError {
    fn from(err: steinlab::Error) -> Self {
        let code = match err {
            steinlab::Error::Convergence(_) => 3,
            _ => 2,
        };
        CliError {
            code,
            message: err.to_string(),
        }
    }
}

fn main() {
    let cli = Cli::parse();
    std::process::exit(run(cli));
}

fn common_of(cmd: &Command) -> &Common {
    match cmd {
        Command::Exact { common, .. }
        | Command::Simulate { common, .. }
        | Command::RegionGrid { common, .. }
        | Command::Sweep { common, .. }
        | Command::SymmetryCheck { common, .. }
        | Command::Selfcheck { common } => common,
    }
}

fn run(cli: Cli) -> i32 {
    let common = common_of(&cli.command);
    if common.workers > 0 {
        // Worker count shapes scheduling only; all reductions are
        // chunk-ordered, so output bytes cannot depend on it.
        let _ = rayon::ThreadPoolBuilder::new()
            .num_threads(common.workers)
            .build_global();
    }
    let format = match common.format {
        FormatArg::Csv => Format::Csv,
        FormatArg::Json => Format::Json,
    };
    let out_path = common.out.clone();
    let check = common.check;

    let built = match commands::build(&cli.command) {
        Ok(b) => b,
        Err(e) => {
            eprintln!("error: {}", e.message);
            return e.code;
        }
    };

    let write_result = match out_path {
        Some(path) => std::fs::File::create(&path)
            .map(|mut f| output::render(&built.table, &built.provenance, format, &mut f))
            .and_then(|r| r),
        None => {
            let stdout = std::io::stdout();
            let mut lock = stdout.lock();
            output::render(&built.table, &built.provenance, format, &mut lock)
        }
    };
    if let Err(e) = write_result {
        eprintln!("error: failed to write output: {e}");
        return 2;
    }

    if check && built.verdict_failed {
        return 4;
    }
    0
}
