//! `grv meta`: agreement of two ranked lists across top-k cutoffs.

use std::fs;
use std::path::{Path, PathBuf};

use clap::{Args, ValueEnum};
use grv::meta::{canberra_sweep, PValueMatrix, RankedList, SweepPoint};
use grv::rng::resolve_seed;
use grv::GrvError;
use serde::Serialize;

use crate::error::{CliError, CliResult};

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum ListFormat {
    /// By extension: .json scan report, .csv/.tsv p-value matrix, anything else a list.
    Auto,
    /// One ID per line, most significant first.
    List,
    /// results.json written by `grv scan`.
    Scan,
    /// CSV of p-values with unit IDs in the first column, combined by maxP.
    Pvalues,
}

#[derive(Debug, Clone, Args)]
pub struct MetaArgs {
    #[arg(long)]
    pub a: PathBuf,
    #[arg(long)]
    pub b: PathBuf,
    #[arg(long, value_enum, default_value_t = ListFormat::Auto)]
    pub format: ListFormat,
    /// Restrict both lists to their shared IDs.
    #[arg(long)]
    pub intersect: bool,
    /// Cutoffs to evaluate, comma separated (default: every k up to --k-max).
    #[arg(long, value_delimiter = ',')]
    pub k: Vec<usize>,
    /// Largest cutoff of the default sweep (default: list length).
    #[arg(long)]
    pub k_max: Option<usize>,
    #[arg(long, default_value_t = 5000)]
    pub n_perm: u64,
    #[arg(long)]
    pub seed: Option<u64>,
    /// Write the JSON report here instead of stdout.
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// Plot data: k, distance, baseline, p_value, q_value.
    #[arg(long)]
    pub plot_csv: Option<PathBuf>,
}

#[derive(Debug, Clone, Serialize)]
pub struct MetaReport {
    pub n_items: usize,
    pub n_perm: u64,
    pub seed: u64,
    pub points: Vec<SweepPoint>,
}

fn ranked_from_scan(path: &Path) -> CliResult<RankedList> {
    let value: serde_json::Value = serde_json::from_str(&fs::read_to_string(path)?)?;
    let pathways = value
        .get("pathways")
        .and_then(|p| p.as_array())
        .ok_or_else(|| GrvError::Parse(format!("{}: no 'pathways' array", path.display())))?;
    let mut ranked: Vec<(u64, String)> = pathways
        .iter()
        .filter_map(|p| {
            Some((
                p.get("rank")?.as_u64()?,
                p.get("pathway")?.as_str()?.to_owned(),
            ))
        })
        .collect();
    ranked.sort();
    Ok(RankedList::new(
        ranked.into_iter().map(|(_, id)| id).collect(),
    )?)
}

pub fn read_ranked(path: &Path, format: ListFormat) -> CliResult<RankedList> {
    let ext = path
        .extension()
        .and_then(|e| e.to_str())
        .map(str::to_ascii_lowercase);
    let format = match (format, ext.as_deref()) {
        (ListFormat::Auto, Some("json")) => ListFormat::Scan,
        (ListFormat::Auto, Some("csv" | "tsv")) => ListFormat::Pvalues,
        (ListFormat::Auto, _) => ListFormat::List,
        (f, _) => f,
    };
    match format {
        ListFormat::Scan => ranked_from_scan(path),
        ListFormat::Pvalues => Ok(PValueMatrix::from_reader(fs::File::open(path)?)?.ranked()),
        _ => Ok(RankedList::from_path(path)?),
    }
}

pub fn run_meta(args: &MetaArgs) -> CliResult<MetaReport> {
    let mut a = read_ranked(&args.a, args.format)?;
    let mut b = read_ranked(&args.b, args.format)?;
    if args.intersect {
        a = a.intersect(&b)?;
        b = b.intersect(&a)?;
    }
    let ks: Vec<usize> = if args.k.is_empty() {
        let k_max = args.k_max.unwrap_or(a.len());
        if k_max > a.len() {
            return Err(CliError::Usage(format!(
                "--k-max {k_max} exceeds the list length {}",
                a.len()
            )));
        }
        (1..=k_max).collect()
    } else {
        args.k.clone()
    };
    let seed = resolve_seed(args.seed);
    let points = canberra_sweep(&a, &b, &ks, args.n_perm, seed)?;
    if let Some(path) = &args.plot_csv {
        let mut w = csv::Writer::from_path(path)?;
        for p in &points {
            w.serialize(p)?;
        }
        w.flush()?;
    }
    Ok(MetaReport {
        n_items: a.len(),
        n_perm: args.n_perm,
        seed,
        points,
    })
}
