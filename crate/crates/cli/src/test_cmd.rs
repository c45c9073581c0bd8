//! `grv test`: one association test between two sample blocks.

use std::path::PathBuf;

use clap::{Args, ValueEnum};
use grv::inference::{
    grv_pvalue_analytic, grv_pvalue_exhaustive, grv_pvalue_permutation_with,
    mantel_pvalue_exhaustive, mantel_pvalue_permutation_with, PermutationOptions, TestResult,
};
use grv::matrices::gower_center;
use grv::rng::resolve_seed;
use serde::Serialize;

use crate::error::{CliError, CliResult};
use crate::input::{align, load, MeasureArg};

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Statistic {
    Grv,
    Mantel,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum MethodArg {
    Analytic,
    MonteCarlo,
    Exhaustive,
}

#[derive(Debug, Clone, Args)]
pub struct TestArgs {
    /// First samples × features table (genotypes, reals, or a distance matrix).
    #[arg(long)]
    pub x: PathBuf,
    /// Second table, with samples in the same order as --x.
    #[arg(long)]
    pub y: PathBuf,
    /// Measure for --x, or "distance" when the file is already a distance matrix.
    #[arg(long, default_value = "euclidean")]
    pub x_measure: MeasureArg,
    #[arg(long, default_value = "euclidean")]
    pub y_measure: MeasureArg,
    #[arg(long, value_enum, default_value_t = Statistic::Grv)]
    pub statistic: Statistic,
    #[arg(long, value_enum, default_value_t = MethodArg::Analytic)]
    pub method: MethodArg,
    #[arg(long, default_value_t = 10_000)]
    pub n_perm: u64,
    /// Seed for permutation streams; falls back to GRV_SEED.
    #[arg(long)]
    pub seed: Option<u64>,
    /// Worker threads for permutation loops (default: all cores).
    #[arg(long)]
    pub workers: Option<usize>,
    /// First column of each table holds sample IDs.
    #[arg(long)]
    pub id_column: bool,
    /// Match rows by sample ID instead of by position (implies --id-column).
    #[arg(long)]
    pub join_on_id: bool,
}

/// The JSON document printed by `grv test`.
#[derive(Debug, Clone, Serialize)]
pub struct TestReport {
    pub test: Statistic,
    pub x_measure: String,
    pub y_measure: String,
    pub n: usize,
    #[serde(flatten)]
    pub result: TestResult,
}

pub fn run_test(args: &TestArgs) -> CliResult<TestReport> {
    let id_column = args.id_column || args.join_on_id;
    let x = load(&args.x, args.x_measure, id_column)?;
    let y = load(&args.y, args.y_measure, id_column)?;
    let y_block = align(&x, y, args.join_on_id)?;
    let dx = x.block.distances(args.x_measure)?;
    let dy = y_block.distances(args.y_measure)?;
    let opts = PermutationOptions {
        workers: args.workers,
    };
    let seed = resolve_seed(args.seed);
    let result = match (args.statistic, args.method) {
        (Statistic::Grv, MethodArg::Analytic) => {
            grv_pvalue_analytic(&gower_center(&dx)?, &gower_center(&dy)?)?
        }
        (Statistic::Grv, MethodArg::MonteCarlo) => grv_pvalue_permutation_with(
            &gower_center(&dx)?,
            &gower_center(&dy)?,
            args.n_perm,
            seed,
            opts,
        )?,
        (Statistic::Grv, MethodArg::Exhaustive) => {
            grv_pvalue_exhaustive(&gower_center(&dx)?, &gower_center(&dy)?)?
        }
        (Statistic::Mantel, MethodArg::Analytic) => {
            return Err(CliError::Usage(
                "the Mantel statistic has no analytic null; use --method monte-carlo".into(),
            ))
        }
        (Statistic::Mantel, MethodArg::MonteCarlo) => {
            mantel_pvalue_permutation_with(&dx, &dy, args.n_perm, seed, opts)?
        }
        (Statistic::Mantel, MethodArg::Exhaustive) => mantel_pvalue_exhaustive(&dx, &dy)?,
    };
    Ok(TestReport {
        test: args.statistic,
        x_measure: args.x_measure.to_string(),
        y_measure: args.y_measure.to_string(),
        n: dx.n(),
        result,
    })
}
