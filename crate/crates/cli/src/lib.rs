//! Command-line front end for GRV association testing.
//!
//! Subcommands: `test` (one pair of inputs), `scan` (pathway × measure-pair
//! batches from a manifest), `simulate` (power and size), and `meta` (ranked-list
//! agreement).

pub mod error;
pub mod input;
pub mod meta_cmd;
pub mod scan;
pub mod simulate;
pub mod test_cmd;

use std::fs::File;
use std::io::Write;

use clap::{Parser, Subcommand};

pub use error::{CliError, CliResult};

#[derive(Debug, Parser)]
#[command(
    name = "grv",
    version,
    about = "Association tests between paired distance matrices"
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Test one pair of sample blocks; prints a JSON result.
    Test(test_cmd::TestArgs),
    /// Run every pathway × measure-pair test listed by a manifest.
    Scan(scan::ScanArgs),
    /// Estimate power or size on synthetic eQTL data; prints CSV.
    Simulate(simulate::SimulateArgs),
    /// Compare two ranked lists with the top-k Canberra distance.
    Meta(meta_cmd::MetaArgs),
}

fn write_json<T: serde::Serialize>(out: &mut dyn Write, value: &T) -> CliResult<()> {
    serde_json::to_writer_pretty(&mut *out, value)?;
    writeln!(out)?;
    Ok(())
}

pub fn run(cli: &Cli, out: &mut dyn Write) -> CliResult<()> {
    match &cli.command {
        Command::Test(args) => write_json(out, &test_cmd::run_test(args)?),
        Command::Scan(args) => {
            let report = scan::run_scan(args)?;
            scan::write_report(&report, &args.out)?;
            let t = report.totals;
            writeln!(
                out,
                "{} pathways tested, {} skipped, {} tests ({} failed); reports in {}",
                t.pathways_tested,
                t.pathways_skipped,
                t.tests,
                t.failed_tests,
                args.out.display()
            )?;
            Ok(())
        }
        Command::Simulate(args) => {
            let rows = simulate::run_simulate(args)?;
            let sink: Box<dyn Write + '_> = match &args.out {
                Some(p) => Box::new(File::create(p)?),
                None => Box::new(&mut *out),
            };
            let mut w = csv::WriterBuilder::new()
                .has_headers(false)
                .from_writer(sink);
            w.write_record(simulate::HEADER)?;
            for r in &rows {
                w.serialize(r)?;
            }
            w.flush()?;
            if let Some(p) = &args.json {
                write_json(&mut File::create(p)?, &rows)?;
            }
            Ok(())
        }
        Command::Meta(args) => {
            let report = meta_cmd::run_meta(args)?;
            match &args.out {
                Some(p) => write_json(&mut File::create(p)?, &report),
                None => write_json(out, &report),
            }
        }
    }
}
