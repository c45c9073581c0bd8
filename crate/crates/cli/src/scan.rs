//! `grv scan`: every pathway × measure-pair test from a manifest.

use std::collections::{HashMap, HashSet};
use std::fs::{self, File};
use std::io::Write;
use std::path::{Path, PathBuf};

use clap::Args;
use grv::distances::{
    pairwise_genotype, pairwise_real, DistanceMeasure, GenotypeMatrix, RealMatrix,
};
use grv::inference::{
    analytic_from_profiles, grv_pvalue_permutation, Method, MomentProfile, TestResult,
};
use grv::io::{read_genotype_matrix, read_real_matrix, TableOptions};
use grv::matrices::{gower_center, GramMatrix};
use grv::meta::combine_maxp;
use grv::rng::{derive_seed, label_hash, resolve_seed};
use grv::{association, GrvError};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{CliError, CliResult};
use crate::input::{join_rows, Block};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "snake_case")]
pub enum ScanMethod {
    #[default]
    Analytic,
    #[serde(alias = "monte-carlo")]
    MonteCarlo,
}

fn default_n_perm() -> u64 {
    10_000
}

fn default_min_features() -> usize {
    5
}

fn default_max_features() -> usize {
    200
}

/// The declarative scan configuration, as written in the TOML manifest.
#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScanManifest {
    pub genotype_file: PathBuf,
    pub expression_file: PathBuf,
    pub pathway_map_file: PathBuf,
    pub gen_measures: Vec<String>,
    pub gex_measures: Vec<String>,
    #[serde(default)]
    pub method: ScanMethod,
    #[serde(default = "default_n_perm")]
    pub n_perm: u64,
    #[serde(default)]
    pub seed: Option<u64>,
    #[serde(default = "default_min_features")]
    pub min_features: usize,
    #[serde(default = "default_max_features")]
    pub max_features: usize,
    /// First column of both data files holds sample IDs; rows are joined on it.
    #[serde(default)]
    pub id_column: bool,
}

impl ScanManifest {
    pub fn from_path(path: &Path) -> CliResult<Self> {
        let text = fs::read_to_string(path)
            .map_err(|e| std::io::Error::new(e.kind(), format!("{}: {e}", path.display())))?;
        toml::from_str(&text).map_err(|e| CliError::Manifest(e.to_string()))
    }
}

#[derive(Debug, Clone, Default, Args)]
pub struct ScanArgs {
    /// TOML manifest; relative paths inside it resolve against its directory.
    pub manifest: PathBuf,
    /// Directory for results.csv, results.json, skipped.csv and combined.csv.
    #[arg(long, default_value = "grv-scan")]
    pub out: PathBuf,
    #[arg(long, value_enum)]
    pub method: Option<ScanMethod>,
    #[arg(long)]
    pub n_perm: Option<u64>,
    #[arg(long)]
    pub seed: Option<u64>,
    #[arg(long)]
    pub min_features: Option<usize>,
    #[arg(long)]
    pub max_features: Option<usize>,
    /// Worker threads across pathways (default: all cores).
    #[arg(long)]
    pub workers: Option<usize>,
}

/// Manifest after flag overrides and seed resolution, embedded in results.json.
#[derive(Debug, Clone, Serialize)]
pub struct ResolvedConfig {
    pub genotype_file: String,
    pub expression_file: String,
    pub pathway_map_file: String,
    pub gen_measures: Vec<String>,
    pub gex_measures: Vec<String>,
    pub method: ScanMethod,
    pub n_perm: u64,
    pub seed: u64,
    pub min_features: usize,
    pub max_features: usize,
    pub id_column: bool,
}

/// Column indices (0-based, excluding any ID column) of one pathway.
#[derive(Debug, Clone, PartialEq, Eq, Deserialize)]
pub struct Pathway {
    pub id: String,
    #[serde(default)]
    pub genotype: Vec<usize>,
    #[serde(default)]
    pub expression: Vec<usize>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Side {
    Genotype,
    Expression,
}

fn parse_side(s: &str) -> CliResult<Side> {
    match s.trim().to_ascii_lowercase().as_str() {
        "genotype" | "gen" | "snp" => Ok(Side::Genotype),
        "expression" | "gex" | "probe" => Ok(Side::Expression),
        other => Err(CliError::Manifest(format!(
            "pathway map block must be 'genotype' or 'expression', got '{other}'"
        ))),
    }
}

/// Resolve a column reference: a 0-based index, or a header name.
fn column_ref(field: &str, names: Option<&HashMap<&str, usize>>) -> CliResult<usize> {
    if let Ok(i) = field.parse::<usize>() {
        return Ok(i);
    }
    names
        .and_then(|m| m.get(field).copied())
        .ok_or_else(|| CliError::Manifest(format!("unknown column '{field}' in pathway map")))
}

fn name_index(names: &[String]) -> HashMap<&str, usize> {
    names
        .iter()
        .enumerate()
        .map(|(i, n)| (n.as_str(), i))
        .collect()
}

/// Read a pathway map: CSV rows `pathway_id,block,column` or a JSON array of pathways.
/// Pathways keep the order of first appearance.
pub fn read_pathway_map(
    path: &Path,
    gen_columns: Option<&[String]>,
    gex_columns: Option<&[String]>,
) -> CliResult<Vec<Pathway>> {
    let is_json = path
        .extension()
        .is_some_and(|e| e.eq_ignore_ascii_case("json"));
    let pathways: Vec<Pathway> = if is_json {
        let text = fs::read_to_string(path)?;
        serde_json::from_str(&text).map_err(|e| CliError::Manifest(format!("pathway map: {e}")))?
    } else {
        let gen_idx = gen_columns.map(name_index);
        let gex_idx = gex_columns.map(name_index);
        let mut rdr = csv::ReaderBuilder::new()
            .has_headers(true)
            .trim(csv::Trim::All)
            .from_path(path)?;
        let mut out: Vec<Pathway> = Vec::new();
        let mut slot: HashMap<String, usize> = HashMap::new();
        for (line, rec) in rdr.records().enumerate() {
            let rec = rec?;
            if rec.len() < 3 {
                return Err(CliError::Manifest(format!(
                    "pathway map row {}: expected pathway_id,block,column",
                    line + 2
                )));
            }
            let id = rec[0].to_string();
            let side = parse_side(&rec[1])?;
            let i = *slot.entry(id.clone()).or_insert_with(|| {
                out.push(Pathway {
                    id,
                    genotype: Vec::new(),
                    expression: Vec::new(),
                });
                out.len() - 1
            });
            match side {
                Side::Genotype => out[i].genotype.push(column_ref(&rec[2], gen_idx.as_ref())?),
                Side::Expression => out[i]
                    .expression
                    .push(column_ref(&rec[2], gex_idx.as_ref())?),
            }
        }
        out
    };
    let mut seen = HashSet::new();
    for p in &pathways {
        if !seen.insert(p.id.as_str()) {
            return Err(CliError::Manifest(format!(
                "pathway '{}' listed twice",
                p.id
            )));
        }
        for cols in [&p.genotype, &p.expression] {
            let mut s = HashSet::new();
            if let Some(c) = cols.iter().find(|&&c| !s.insert(c)) {
                return Err(CliError::Manifest(format!(
                    "pathway '{}' lists column {c} twice",
                    p.id
                )));
            }
        }
    }
    Ok(pathways)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Status {
    Ok,
    Error,
}

/// One pathway × measure-pair test.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ResultRow {
    pub pathway: String,
    pub gen_measure: String,
    pub gex_measure: String,
    pub n_snps: usize,
    pub n_probes: usize,
    pub status: Status,
    pub statistic: Option<f64>,
    pub p_value: Option<f64>,
    pub method: Option<Method>,
    pub n_permutations: u64,
    pub seed: Option<u64>,
    pub error: Option<String>,
}

/// Per-pathway maxP combination over the successful tests.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PathwaySummary {
    pub pathway: String,
    pub rank: Option<usize>,
    pub combined_p: Option<f64>,
    pub n_tests: usize,
    pub n_failed: usize,
    pub n_snps: usize,
    pub n_probes: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SkippedPathway {
    pub pathway: String,
    pub n_snps: usize,
    pub n_probes: usize,
    pub reason: String,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct Totals {
    pub pathways_in_map: usize,
    pub pathways_tested: usize,
    pub pathways_skipped: usize,
    pub tests: usize,
    pub failed_tests: usize,
    /// Permutations evaluated across all tests; zero for the analytic method.
    pub permutations: u64,
}

#[derive(Debug, Clone, Serialize)]
pub struct ScanReport {
    pub config: ResolvedConfig,
    pub totals: Totals,
    /// Tested pathways in ranked order.
    pub pathways: Vec<PathwaySummary>,
    pub skipped: Vec<SkippedPathway>,
    pub results: Vec<ResultRow>,
}

fn parse_measures(ids: &[String], genotype: bool) -> CliResult<Vec<DistanceMeasure>> {
    if ids.is_empty() {
        return Err(CliError::Manifest(format!(
            "{} must list at least one measure",
            if genotype {
                "gen_measures"
            } else {
                "gex_measures"
            }
        )));
    }
    ids.iter()
        .map(|s| {
            let m: DistanceMeasure = s.parse()?;
            if m.is_genotype() != genotype {
                return Err(CliError::Manifest(format!(
                    "'{m}' is not a {} measure",
                    if genotype { "genotype" } else { "real-valued" }
                )));
            }
            Ok(m)
        })
        .collect()
}

fn resolve_path(base: &Path, p: &Path) -> PathBuf {
    if p.is_absolute() {
        p.to_path_buf()
    } else {
        base.join(p)
    }
}

/// Inputs shared by every pathway task.
struct ScanData {
    genotypes: GenotypeMatrix,
    expression: RealMatrix,
    gen: Vec<DistanceMeasure>,
    gex: Vec<DistanceMeasure>,
    method: ScanMethod,
    n_perm: u64,
    seed: u64,
}

/// A prepared side of one pathway: its centered matrix and moment profile, or why it failed.
type Prepared = Result<(GramMatrix, Option<MomentProfile>), String>;

fn prepare(d: grv::Result<grv::matrices::DistanceMatrix>, analytic: bool) -> Prepared {
    let g = d
        .and_then(|d| gower_center(&d))
        .map_err(|e| e.to_string())?;
    let profile = analytic.then(|| MomentProfile::of(&g));
    Ok((g, profile))
}

fn run_pair(
    data: &ScanData,
    x: &(GramMatrix, Option<MomentProfile>),
    y: &(GramMatrix, Option<MomentProfile>),
    seed: u64,
) -> grv::Result<TestResult> {
    match data.method {
        ScanMethod::Analytic => {
            let value = association::grv(&x.0, &y.0)?;
            let (px, py) = (x.1.as_ref(), y.1.as_ref());
            analytic_from_profiles(px.expect("profile"), py.expect("profile"), &value)
        }
        ScanMethod::MonteCarlo => grv_pvalue_permutation(&x.0, &y.0, data.n_perm, seed),
    }
}

fn scan_pathway(data: &ScanData, p: &Pathway) -> Vec<ResultRow> {
    let analytic = data.method == ScanMethod::Analytic;
    let geno = data.genotypes.select_columns(&p.genotype);
    let expr = data.expression.select_columns(&p.expression);
    let gen: Vec<Prepared> = data
        .gen
        .iter()
        .map(|&m| match &geno {
            Ok(g) => prepare(pairwise_genotype(g, m), analytic),
            Err(e) => Err(e.to_string()),
        })
        .collect();
    let gex: Vec<Prepared> = data
        .gex
        .iter()
        .map(|&m| match &expr {
            Ok(r) => prepare(pairwise_real(r, m), analytic),
            Err(e) => Err(e.to_string()),
        })
        .collect();
    let mut rows = Vec::with_capacity(gen.len() * gex.len());
    for (gm, gp) in data.gen.iter().zip(&gen) {
        for (em, ep) in data.gex.iter().zip(&gex) {
            let seed = derive_seed(
                data.seed,
                &[label_hash(&p.id), label_hash(gm.id()), label_hash(em.id())],
            );
            let outcome = match (gp, ep) {
                (Ok(x), Ok(y)) => run_pair(data, x, y, seed).map_err(|e| e.to_string()),
                (Err(e), _) => Err(format!("{gm}: {e}")),
                (_, Err(e)) => Err(format!("{em}: {e}")),
            };
            let mut row = ResultRow {
                pathway: p.id.clone(),
                gen_measure: gm.id().to_string(),
                gex_measure: em.id().to_string(),
                n_snps: p.genotype.len(),
                n_probes: p.expression.len(),
                status: Status::Ok,
                statistic: None,
                p_value: None,
                method: None,
                n_permutations: 0,
                seed: None,
                error: None,
            };
            match outcome {
                Ok(r) => {
                    row.statistic = Some(r.statistic);
                    row.p_value = Some(r.p_value);
                    row.method = Some(r.method);
                    row.n_permutations = r.n_permutations;
                    row.seed = r.seed;
                }
                Err(e) => {
                    row.status = Status::Error;
                    row.error = Some(e);
                }
            }
            rows.push(row);
        }
    }
    rows
}

fn load_data(cfg: &ResolvedConfig, base: &Path) -> CliResult<ScanBlocks> {
    let opts = TableOptions {
        id_column: cfg.id_column,
        ..TableOptions::default()
    };
    let geno = read_genotype_matrix(&resolve_path(base, Path::new(&cfg.genotype_file)), opts)?;
    let expr = read_real_matrix(&resolve_path(base, Path::new(&cfg.expression_file)), opts)?;
    let n = geno.data.n();
    let expression = match (&geno.ids, &expr.ids) {
        (Some(gi), Some(ei)) => {
            match Block::Real(expr.data.clone()).reorder(&join_rows(gi, ei)?)? {
                Block::Real(r) => r,
                _ => unreachable!("reorder keeps the block kind"),
            }
        }
        _ => {
            if expr.data.n() != n {
                return Err(GrvError::Dimension(format!(
                    "sample counts differ: genotype file has {n} rows, expression file has {}",
                    expr.data.n()
                ))
                .into());
            }
            expr.data
        }
    };
    Ok(ScanBlocks {
        genotypes: geno.data,
        gen_columns: geno.columns,
        expression,
        gex_columns: expr.columns,
    })
}

struct ScanBlocks {
    genotypes: GenotypeMatrix,
    gen_columns: Option<Vec<String>>,
    expression: RealMatrix,
    gex_columns: Option<Vec<String>>,
}

pub fn run_scan(args: &ScanArgs) -> CliResult<ScanReport> {
    let manifest = ScanManifest::from_path(&args.manifest)?;
    let base = args
        .manifest
        .parent()
        .unwrap_or(Path::new("."))
        .to_path_buf();
    let cfg = ResolvedConfig {
        genotype_file: manifest.genotype_file.display().to_string(),
        expression_file: manifest.expression_file.display().to_string(),
        pathway_map_file: manifest.pathway_map_file.display().to_string(),
        gen_measures: Vec::new(),
        gex_measures: Vec::new(),
        method: args.method.unwrap_or(manifest.method),
        n_perm: args.n_perm.unwrap_or(manifest.n_perm),
        seed: resolve_seed(args.seed.or(manifest.seed)),
        min_features: args.min_features.unwrap_or(manifest.min_features),
        max_features: args.max_features.unwrap_or(manifest.max_features),
        id_column: manifest.id_column,
    };
    let gen = parse_measures(&manifest.gen_measures, true)?;
    let gex = parse_measures(&manifest.gex_measures, false)?;
    let cfg = ResolvedConfig {
        gen_measures: gen.iter().map(|m| m.id().to_string()).collect(),
        gex_measures: gex.iter().map(|m| m.id().to_string()).collect(),
        ..cfg
    };
    if cfg.min_features > cfg.max_features {
        return Err(CliError::Manifest(format!(
            "min_features {} exceeds max_features {}",
            cfg.min_features, cfg.max_features
        )));
    }
    if cfg.method == ScanMethod::MonteCarlo && cfg.n_perm == 0 {
        return Err(CliError::Manifest("n_perm must be at least 1".into()));
    }
    let blocks = load_data(&cfg, &base)?;
    let pathways = read_pathway_map(
        &resolve_path(&base, &manifest.pathway_map_file),
        blocks.gen_columns.as_deref(),
        blocks.gex_columns.as_deref(),
    )?;
    let (p_total, q_total) = (blocks.genotypes.p(), blocks.expression.q());
    for pw in &pathways {
        if let Some(c) = pw.genotype.iter().find(|&&c| c >= p_total) {
            return Err(CliError::Manifest(format!(
                "pathway '{}': genotype column {c} out of range (file has {p_total})",
                pw.id
            )));
        }
        if let Some(c) = pw.expression.iter().find(|&&c| c >= q_total) {
            return Err(CliError::Manifest(format!(
                "pathway '{}': expression column {c} out of range (file has {q_total})",
                pw.id
            )));
        }
    }

    let mut skipped = Vec::new();
    let mut kept = Vec::new();
    for pw in &pathways {
        let (ns, np) = (pw.genotype.len(), pw.expression.len());
        let reason = if ns == 0 {
            Some("no genotype columns".to_string())
        } else if np < cfg.min_features {
            Some(format!(
                "{np} expression features, fewer than min_features {}",
                cfg.min_features
            ))
        } else if np > cfg.max_features {
            Some(format!(
                "{np} expression features, more than max_features {}",
                cfg.max_features
            ))
        } else {
            None
        };
        match reason {
            Some(reason) => skipped.push(SkippedPathway {
                pathway: pw.id.clone(),
                n_snps: ns,
                n_probes: np,
                reason,
            }),
            None => kept.push(pw),
        }
    }

    let data = ScanData {
        genotypes: blocks.genotypes,
        expression: blocks.expression,
        gen,
        gex,
        method: cfg.method,
        n_perm: cfg.n_perm,
        seed: cfg.seed,
    };
    let work =
        || -> Vec<Vec<ResultRow>> { kept.par_iter().map(|pw| scan_pathway(&data, pw)).collect() };
    let per_pathway = match args.workers {
        Some(w) => rayon::ThreadPoolBuilder::new()
            .num_threads(w.max(1))
            .build()
            .map_err(|e| CliError::Usage(format!("cannot start worker pool: {e}")))?
            .install(work),
        None => work(),
    };

    let mut summaries: Vec<PathwaySummary> = kept
        .iter()
        .zip(&per_pathway)
        .map(|(pw, rows)| {
            let ps: Vec<f64> = rows.iter().filter_map(|r| r.p_value).collect();
            PathwaySummary {
                pathway: pw.id.clone(),
                rank: None,
                combined_p: combine_maxp(&ps).ok(),
                n_tests: rows.len(),
                n_failed: rows.len() - ps.len(),
                n_snps: pw.genotype.len(),
                n_probes: pw.expression.len(),
            }
        })
        .collect();
    summaries.sort_by(|a, b| match (a.combined_p, b.combined_p) {
        (Some(x), Some(y)) => x.total_cmp(&y).then_with(|| a.pathway.cmp(&b.pathway)),
        (Some(_), None) => std::cmp::Ordering::Less,
        (None, Some(_)) => std::cmp::Ordering::Greater,
        (None, None) => a.pathway.cmp(&b.pathway),
    });
    for (i, s) in summaries.iter_mut().enumerate() {
        if s.combined_p.is_some() {
            s.rank = Some(i + 1);
        }
    }

    let results: Vec<ResultRow> = per_pathway.into_iter().flatten().collect();
    let totals = Totals {
        pathways_in_map: pathways.len(),
        pathways_tested: kept.len(),
        pathways_skipped: skipped.len(),
        tests: results.len(),
        failed_tests: results.iter().filter(|r| r.status == Status::Error).count(),
        permutations: results.iter().map(|r| r.n_permutations).sum(),
    };
    Ok(ScanReport {
        config: cfg,
        totals,
        pathways: summaries,
        skipped,
        results,
    })
}

const RESULT_HEADER: [&str; 12] = [
    "pathway",
    "gen_measure",
    "gex_measure",
    "n_snps",
    "n_probes",
    "status",
    "statistic",
    "p_value",
    "method",
    "n_permutations",
    "seed",
    "error",
];
const COMBINED_HEADER: [&str; 7] = [
    "pathway",
    "rank",
    "combined_p",
    "n_tests",
    "n_failed",
    "n_snps",
    "n_probes",
];
const SKIPPED_HEADER: [&str; 4] = ["pathway", "n_snps", "n_probes", "reason"];

/// CSV with an explicit header, so empty tables still carry one.
fn write_csv<T: Serialize>(path: &Path, header: &[&str], rows: &[T]) -> CliResult<()> {
    let mut w = csv::WriterBuilder::new()
        .has_headers(false)
        .from_path(path)?;
    w.write_record(header)?;
    for r in rows {
        w.serialize(r)?;
    }
    w.flush()?;
    Ok(())
}

/// Write results.csv, combined.csv, skipped.csv and results.json into `dir`.
pub fn write_report(report: &ScanReport, dir: &Path) -> CliResult<()> {
    fs::create_dir_all(dir)?;
    write_csv(&dir.join("results.csv"), &RESULT_HEADER, &report.results)?;
    write_csv(
        &dir.join("combined.csv"),
        &COMBINED_HEADER,
        &report.pathways,
    )?;
    write_csv(&dir.join("skipped.csv"), &SKIPPED_HEADER, &report.skipped)?;
    let mut file = File::create(dir.join("results.json"))?;
    serde_json::to_writer_pretty(&mut file, report)?;
    file.write_all(b"\n")?;
    Ok(())
}
