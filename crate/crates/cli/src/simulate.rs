//! `grv simulate`: power and size of the tests on synthetic eQTL data.

use std::path::PathBuf;

use clap::{Args, ValueEnum};
use grv::distances::DistanceMeasure;
use grv::rng::resolve_seed;
use grv::simulation::{estimate_power, estimate_size, EqtlConfig, PowerStudy, PowerTest};
use serde::Serialize;

use crate::error::{CliError, CliResult};

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Mode {
    /// Associated generator; rejection rate at --alpha.
    Power,
    /// Null generator; rejection rates at each of --levels.
    Size,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum TestArg {
    GrvAnalytic,
    GrvPermutation,
    MantelPermutation,
}

#[derive(Debug, Clone, Args)]
pub struct SimulateArgs {
    #[arg(long, value_enum, default_value_t = Mode::Power)]
    pub mode: Mode,
    /// Sample sizes, comma separated.
    #[arg(long, value_delimiter = ',', default_value = "50")]
    pub n: Vec<usize>,
    /// SNPs per dataset.
    #[arg(long, default_value_t = 2)]
    pub p: usize,
    /// Expression features per dataset.
    #[arg(long, default_value_t = 10)]
    pub q: usize,
    #[arg(long, value_delimiter = ',', default_value = "ibs")]
    pub gen_measures: Vec<DistanceMeasure>,
    #[arg(long, value_delimiter = ',', default_value = "mahalanobis")]
    pub gex_measures: Vec<DistanceMeasure>,
    #[arg(long, value_enum, default_value_t = TestArg::GrvAnalytic)]
    pub test: TestArg,
    /// Permutations per test for the permutation tests.
    #[arg(long, default_value_t = 10_000)]
    pub n_perm: u64,
    #[arg(long, default_value_t = 50)]
    pub runs: usize,
    #[arg(long, default_value_t = 50)]
    pub datasets: usize,
    /// Significance level in power mode.
    #[arg(long, default_value_t = 0.001)]
    pub alpha: f64,
    /// Significance levels in size mode, comma separated.
    #[arg(long, value_delimiter = ',', default_value = "0.01,0.05,0.1")]
    pub levels: Vec<f64>,
    #[arg(long, default_value_t = 0.1)]
    pub maf_low: f64,
    #[arg(long, default_value_t = 0.5)]
    pub maf_high: f64,
    /// Wishart degrees of freedom of the noise covariance (default Q + 1).
    #[arg(long)]
    pub wishart_df: Option<usize>,
    /// Draw the noise mean and covariance once per run rather than per dataset.
    #[arg(long)]
    pub shared_noise: bool,
    #[arg(long)]
    pub seed: Option<u64>,
    /// Write the CSV report here instead of stdout.
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// Also write the rows as JSON.
    #[arg(long)]
    pub json: Option<PathBuf>,
}

/// One cell of the power/size table.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SimulationRow {
    pub mode: Mode,
    pub n: usize,
    pub gen_measure: String,
    pub gex_measure: String,
    pub test: String,
    pub alpha: f64,
    pub rate: f64,
    pub sd: f64,
    /// False when a single run leaves the spread undefined.
    pub sd_defined: bool,
    pub runs: usize,
    pub datasets_per_run: usize,
    pub skipped: usize,
    /// "rate (sd)" as printed in power tables.
    pub cell: String,
}

pub const HEADER: [&str; 13] = [
    "mode",
    "n",
    "gen_measure",
    "gex_measure",
    "test",
    "alpha",
    "rate",
    "sd",
    "sd_defined",
    "runs",
    "datasets_per_run",
    "skipped",
    "cell",
];

pub fn run_simulate(args: &SimulateArgs) -> CliResult<Vec<SimulationRow>> {
    let test = match args.test {
        TestArg::GrvAnalytic => PowerTest::GrvAnalytic,
        TestArg::GrvPermutation => PowerTest::GrvPermutation {
            n_perm: args.n_perm,
        },
        TestArg::MantelPermutation => PowerTest::MantelPermutation {
            n_perm: args.n_perm,
        },
    };
    if args.n.is_empty() || args.gen_measures.is_empty() || args.gex_measures.is_empty() {
        return Err(CliError::Usage(
            "--n, --gen-measures and --gex-measures need values".into(),
        ));
    }
    if args.mode == Mode::Size && args.levels.is_empty() {
        return Err(CliError::Usage("size mode needs at least one level".into()));
    }
    let seed = resolve_seed(args.seed);
    let mut rows = Vec::new();
    for &n in &args.n {
        for &gen in &args.gen_measures {
            for &gex in &args.gex_measures {
                let config = EqtlConfig {
                    maf_range: (args.maf_low, args.maf_high),
                    wishart_df: args.wishart_df,
                    shared_noise: args.shared_noise,
                    ..EqtlConfig::new(n, args.p, args.q, args.mode == Mode::Power, seed)
                };
                let study = PowerStudy {
                    config,
                    gen_measure: gen,
                    gex_measure: gex,
                    test,
                    runs: args.runs,
                    datasets_per_run: args.datasets,
                };
                let estimates = match args.mode {
                    Mode::Power => vec![estimate_power(&study, args.alpha)?],
                    Mode::Size => estimate_size(&study, &args.levels)?,
                };
                rows.extend(estimates.into_iter().map(|e| SimulationRow {
                    mode: args.mode,
                    n,
                    gen_measure: gen.id().to_string(),
                    gex_measure: gex.id().to_string(),
                    test: test.name().to_string(),
                    alpha: e.alpha,
                    rate: e.mean_power,
                    sd: e.sd,
                    sd_defined: e.sd_defined,
                    runs: e.runs,
                    datasets_per_run: e.datasets_per_run,
                    skipped: e.skipped,
                    cell: if e.sd_defined {
                        format!("{:.3} ({:.3})", e.mean_power, e.sd)
                    } else {
                        format!("{:.3} (n/a)", e.mean_power)
                    },
                }));
            }
        }
    }
    Ok(rows)
}
