//! Distance measures for genotype (minor-allele count) and real-valued vectors.

use std::fmt;
use std::str::FromStr;

use nalgebra::{Cholesky, DMatrix, SymmetricEigen};
use serde::{Deserialize, Serialize};

use crate::error::{GrvError, Result};
use crate::matrices::{DistanceMatrix, Metricity};

/// N samples × P SNPs of minor-allele counts in {0, 1, 2}.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct GenotypeMatrix {
    n: usize,
    p: usize,
    values: Vec<u8>,
}

impl GenotypeMatrix {
    /// Row-major `values` of length `n * p`.
    pub fn new(n: usize, p: usize, values: Vec<u8>) -> Result<Self> {
        if n == 0 || p == 0 {
            return Err(GrvError::Dimension(format!(
                "genotype matrix must be non-empty, got {n}x{p}"
            )));
        }
        if values.len() != n * p {
            return Err(GrvError::Dimension(format!(
                "genotype matrix {n}x{p} needs {} values, got {}",
                n * p,
                values.len()
            )));
        }
        if let Some(pos) = values.iter().position(|&v| v > 2) {
            return Err(GrvError::Validation(format!(
                "genotype ({}, {}) = {} is not a minor-allele count in {{0,1,2}}",
                pos / p,
                pos % p,
                values[pos]
            )));
        }
        Ok(Self { n, p, values })
    }

    pub fn from_rows(rows: &[Vec<u8>]) -> Result<Self> {
        let p = rows.first().map_or(0, Vec::len);
        if rows.iter().any(|r| r.len() != p) {
            return Err(GrvError::Dimension(
                "genotype rows have unequal lengths".into(),
            ));
        }
        Self::new(rows.len(), p, rows.concat())
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn p(&self) -> usize {
        self.p
    }

    pub fn row(&self, i: usize) -> &[u8] {
        &self.values[i * self.p..(i + 1) * self.p]
    }

    /// Keep only the listed SNP columns, in the given order.
    pub fn select_columns(&self, cols: &[usize]) -> Result<Self> {
        if let Some(&c) = cols.iter().find(|&&c| c >= self.p) {
            return Err(GrvError::Dimension(format!(
                "genotype column {c} out of range (P = {})",
                self.p
            )));
        }
        let mut values = Vec::with_capacity(self.n * cols.len());
        for i in 0..self.n {
            let row = self.row(i);
            values.extend(cols.iter().map(|&c| row[c]));
        }
        Self::new(self.n, cols.len(), values)
    }

    /// Row sums (total minor-allele counts per sample).
    pub fn row_sums(&self) -> Vec<f64> {
        (0..self.n)
            .map(|i| self.row(i).iter().map(|&v| f64::from(v)).sum())
            .collect()
    }
}

/// N samples × Q real features.
#[derive(Debug, Clone, PartialEq)]
pub struct RealMatrix {
    values: DMatrix<f64>,
}

impl RealMatrix {
    pub fn new(values: DMatrix<f64>) -> Result<Self> {
        if values.nrows() == 0 || values.ncols() == 0 {
            return Err(GrvError::Dimension(format!(
                "real matrix must be non-empty, got {}x{}",
                values.nrows(),
                values.ncols()
            )));
        }
        if let Some(bad) = values.iter().find(|v| !v.is_finite()) {
            return Err(GrvError::Validation(format!(
                "real matrix contains non-finite value {bad}"
            )));
        }
        Ok(Self { values })
    }

    pub fn from_rows(rows: &[Vec<f64>]) -> Result<Self> {
        let q = rows.first().map_or(0, Vec::len);
        if rows.iter().any(|r| r.len() != q) {
            return Err(GrvError::Dimension("real rows have unequal lengths".into()));
        }
        Self::new(DMatrix::from_fn(rows.len(), q, |i, j| rows[i][j]))
    }

    pub fn n(&self) -> usize {
        self.values.nrows()
    }

    pub fn q(&self) -> usize {
        self.values.ncols()
    }

    pub fn values(&self) -> &DMatrix<f64> {
        &self.values
    }

    pub fn row(&self, i: usize) -> Vec<f64> {
        self.values.row(i).iter().copied().collect()
    }

    pub fn select_columns(&self, cols: &[usize]) -> Result<Self> {
        if let Some(&c) = cols.iter().find(|&&c| c >= self.q()) {
            return Err(GrvError::Dimension(format!(
                "feature column {c} out of range (Q = {})",
                self.q()
            )));
        }
        Self::new(self.values.select_columns(cols))
    }
}

/// Every supported distance measure.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum DistanceMeasure {
    Ibs,
    SimpleMatching,
    SokalSneath,
    RogersTanimotoI,
    HammanI,
    Euclidean,
    Manhattan,
    Maximum,
    BrayCurtis,
    Mahalanobis,
    PearsonCorr,
    Cosine,
    SpearmanCorr,
    Nmi,
}

impl DistanceMeasure {
    pub const GENOTYPE: [DistanceMeasure; 5] = [
        DistanceMeasure::Ibs,
        DistanceMeasure::SokalSneath,
        DistanceMeasure::RogersTanimotoI,
        DistanceMeasure::SimpleMatching,
        DistanceMeasure::HammanI,
    ];

    pub const REAL: [DistanceMeasure; 9] = [
        DistanceMeasure::Euclidean,
        DistanceMeasure::Mahalanobis,
        DistanceMeasure::Manhattan,
        DistanceMeasure::Maximum,
        DistanceMeasure::BrayCurtis,
        DistanceMeasure::PearsonCorr,
        DistanceMeasure::SpearmanCorr,
        DistanceMeasure::Cosine,
        DistanceMeasure::Nmi,
    ];

    /// Metricity as labelled in the reference table of measures.
    ///
    /// Manhattan and Maximum do satisfy the triangle inequality, yet the
    /// table labels them semi-metric; the label is kept as published.
    pub fn metricity(self) -> Metricity {
        match self {
            DistanceMeasure::Euclidean => Metricity::Metric,
            _ => Metricity::SemiMetric,
        }
    }

    pub fn is_genotype(self) -> bool {
        Self::GENOTYPE.contains(&self)
    }

    pub fn id(self) -> &'static str {
        match self {
            DistanceMeasure::Ibs => "ibs",
            DistanceMeasure::SimpleMatching => "sm",
            DistanceMeasure::SokalSneath => "ss",
            DistanceMeasure::RogersTanimotoI => "rti",
            DistanceMeasure::HammanI => "hi",
            DistanceMeasure::Euclidean => "euclidean",
            DistanceMeasure::Manhattan => "manhattan",
            DistanceMeasure::Maximum => "maximum",
            DistanceMeasure::BrayCurtis => "braycurtis",
            DistanceMeasure::Mahalanobis => "mahalanobis",
            DistanceMeasure::PearsonCorr => "pearson",
            DistanceMeasure::Cosine => "cosine",
            DistanceMeasure::SpearmanCorr => "spearman",
            DistanceMeasure::Nmi => "nmi",
        }
    }
}

impl fmt::Display for DistanceMeasure {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.id())
    }
}

impl FromStr for DistanceMeasure {
    type Err = GrvError;

    fn from_str(s: &str) -> Result<Self> {
        let key = s.trim().to_ascii_lowercase().replace(['-', '_', ' '], "");
        let m = match key.as_str() {
            "ibs" => DistanceMeasure::Ibs,
            "sm" | "simplematching" => DistanceMeasure::SimpleMatching,
            "ss" | "sokalsneath" => DistanceMeasure::SokalSneath,
            "rti" | "rogerstanimoto" | "rogerstanimotoi" => DistanceMeasure::RogersTanimotoI,
            "hi" | "hammani" | "hamman" => DistanceMeasure::HammanI,
            "euclidean" | "euc" => DistanceMeasure::Euclidean,
            "manhattan" | "man" => DistanceMeasure::Manhattan,
            "maximum" | "max" | "chebyshev" => DistanceMeasure::Maximum,
            "braycurtis" | "bc" => DistanceMeasure::BrayCurtis,
            "mahalanobis" | "mah" => DistanceMeasure::Mahalanobis,
            "pearson" | "pc" | "pearsoncorr" | "correlation" => DistanceMeasure::PearsonCorr,
            "cosine" | "cos" => DistanceMeasure::Cosine,
            "spearman" | "sc" | "spearmancorr" => DistanceMeasure::SpearmanCorr,
            "nmi" => DistanceMeasure::Nmi,
            _ => {
                return Err(GrvError::Validation(format!(
                    "unknown distance measure '{s}'"
                )))
            }
        };
        Ok(m)
    }
}

/// Per-pair genotype agreement counts.
#[derive(Debug, Clone, Copy)]
struct Matches {
    /// m⁺: SNPs with identical minor-allele counts.
    plus: usize,
    /// Σ |x_p − y_p|; IBS shares 2 − |x_p − y_p| alleles per SNP.
    abs_diff: usize,
}

fn matches(x: &[u8], y: &[u8]) -> Matches {
    let mut plus = 0;
    let mut abs_diff = 0;
    for (&a, &b) in x.iter().zip(y) {
        if a == b {
            plus += 1;
        }
        abs_diff += usize::from(a.abs_diff(b));
    }
    Matches { plus, abs_diff }
}

fn rows_parallel<F>(n: usize, f: F) -> Vec<Vec<f64>>
where
    F: Fn(usize, usize) -> f64 + Sync + Send,
{
    crate::par_map(n, |i| ((i + 1)..n).map(|j| f(i, j)).collect())
}

fn assemble(n: usize, rows: Vec<Vec<f64>>, metricity: Metricity) -> Result<DistanceMatrix> {
    DistanceMatrix::from_fn(n, metricity, |i, j| rows[i][j - i - 1])
}

/// Pairwise distances between genotype rows.
pub fn pairwise_genotype(gm: &GenotypeMatrix, measure: DistanceMeasure) -> Result<DistanceMatrix> {
    if !measure.is_genotype() {
        return Err(GrvError::Validation(format!(
            "{measure} is not a genotype distance measure"
        )));
    }
    let n = gm.n();
    let p = gm.p() as f64;
    if measure == DistanceMeasure::HammanI {
        return hamman_i(gm);
    }
    let rows = rows_parallel(n, |i, j| {
        let m = matches(gm.row(i), gm.row(j));
        let plus = m.plus as f64;
        let minus = p - plus;
        match measure {
            DistanceMeasure::Ibs => m.abs_diff as f64 / (2.0 * p),
            DistanceMeasure::SimpleMatching => 1.0 - plus / p,
            DistanceMeasure::SokalSneath => 1.0 - plus / (plus + 0.5 * minus),
            DistanceMeasure::RogersTanimotoI => 1.0 - plus / (plus + 2.0 * minus),
            _ => unreachable!("checked above"),
        }
    });
    assemble(n, rows, measure.metricity())
}

/// Hamman I similarity rescaled into a distance over the whole collection.
///
/// The min/max normalization pool includes the self-pairs (similarity 1), so
/// the maximum sits on the diagonal and every self-distance is exactly 0.
fn hamman_i(gm: &GenotypeMatrix) -> Result<DistanceMatrix> {
    let n = gm.n();
    let p = gm.p() as f64;
    let sim = rows_parallel(n, |i, j| {
        let plus = matches(gm.row(i), gm.row(j)).plus as f64;
        (plus - (p - plus)) / p
    });
    let min = sim.iter().flatten().fold(1.0_f64, |a, &v| a.min(v));
    let shift = min.abs();
    let max = sim.iter().flatten().fold(1.0_f64, |a, &v| a.max(v)) + shift;
    let rows = sim
        .into_iter()
        .map(|row| row.into_iter().map(|s| 1.0 - (s + shift) / max).collect())
        .collect();
    assemble(n, rows, DistanceMeasure::HammanI.metricity())
}

/// Options for real-vector measures.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RealDistanceOptions {
    /// Ridge multiplier λ: when the covariance condition number exceeds
    /// [`MAX_CONDITION`], S + λ·tr(S)/Q·I is used. `None` turns the ridge off and
    /// makes ill-conditioning an error.
    pub mahalanobis_ridge: Option<f64>,
}

impl Default for RealDistanceOptions {
    fn default() -> Self {
        Self {
            mahalanobis_ridge: Some(1e-8),
        }
    }
}

/// Largest covariance condition number accepted without a ridge.
pub const MAX_CONDITION: f64 = 1e12;

/// Pairwise distances between rows of a real matrix with default options.
pub fn pairwise_real(rm: &RealMatrix, measure: DistanceMeasure) -> Result<DistanceMatrix> {
    pairwise_real_with(rm, measure, &RealDistanceOptions::default())
}

pub fn pairwise_real_with(
    rm: &RealMatrix,
    measure: DistanceMeasure,
    opts: &RealDistanceOptions,
) -> Result<DistanceMatrix> {
    if measure.is_genotype() {
        return Err(GrvError::Validation(format!(
            "{measure} is a genotype measure; use pairwise_genotype"
        )));
    }
    let n = rm.n();
    let rows: Vec<Vec<f64>> = (0..n).map(|i| rm.row(i)).collect();
    let metricity = measure.metricity();
    let dist_rows = match measure {
        DistanceMeasure::Euclidean => rows_parallel(n, |i, j| euclidean(&rows[i], &rows[j])),
        DistanceMeasure::Manhattan => rows_parallel(n, |i, j| {
            rows[i]
                .iter()
                .zip(&rows[j])
                .map(|(a, b)| (a - b).abs())
                .sum()
        }),
        DistanceMeasure::Maximum => rows_parallel(n, |i, j| {
            rows[i]
                .iter()
                .zip(&rows[j])
                .fold(0.0_f64, |m, (a, b)| m.max((a - b).abs()))
        }),
        DistanceMeasure::BrayCurtis => {
            if let Some(v) = rm.values().iter().find(|&&v| v < 0.0) {
                return Err(GrvError::Validation(format!(
                    "Bray-Curtis requires nonnegative features, found {v}"
                )));
            }
            rows_parallel(n, |i, j| bray_curtis(&rows[i], &rows[j]))
        }
        DistanceMeasure::Mahalanobis => {
            let white = whiten(rm, opts)?;
            rows_parallel(n, |i, j| euclidean(&white[i], &white[j]))
        }
        DistanceMeasure::PearsonCorr => {
            let centered = rows
                .iter()
                .enumerate()
                .map(|(i, r)| unit_centered(r).ok_or_else(|| undefined_corr(i, "Pearson")))
                .collect::<Result<Vec<_>>>()?;
            rows_parallel(n, |i, j| correlation_distance(&centered[i], &centered[j]))
        }
        DistanceMeasure::SpearmanCorr => {
            let centered = rows
                .iter()
                .enumerate()
                .map(|(i, r)| {
                    unit_centered(&spearman_ranks(r)).ok_or_else(|| undefined_corr(i, "Spearman"))
                })
                .collect::<Result<Vec<_>>>()?;
            rows_parallel(n, |i, j| correlation_distance(&centered[i], &centered[j]))
        }
        DistanceMeasure::Cosine => {
            let unit = rows
                .iter()
                .enumerate()
                .map(|(i, r)| {
                    let norm = r.iter().map(|v| v * v).sum::<f64>().sqrt();
                    if norm == 0.0 {
                        Err(GrvError::Validation(format!(
                            "cosine distance undefined: sample {i} is the zero vector"
                        )))
                    } else {
                        Ok(r.iter().map(|v| v / norm).collect::<Vec<_>>())
                    }
                })
                .collect::<Result<Vec<_>>>()?;
            rows_parallel(n, |i, j| correlation_distance(&unit[i], &unit[j]))
        }
        DistanceMeasure::Nmi => {
            if rm.q() < 2 {
                return Err(GrvError::Dimension("NMI needs at least 2 features".into()));
            }
            rows_parallel(n, |i, j| nmi_distance(&rows[i], &rows[j]).distance)
        }
        _ => unreachable!("genotype measures rejected above"),
    };
    assemble(n, dist_rows, metricity)
}

fn undefined_corr(i: usize, which: &str) -> GrvError {
    GrvError::Validation(format!(
        "{which} correlation undefined: sample {i} is a constant vector"
    ))
}

fn euclidean(x: &[f64], y: &[f64]) -> f64 {
    x.iter()
        .zip(y)
        .map(|(a, b)| (a - b) * (a - b))
        .sum::<f64>()
        .sqrt()
}

fn bray_curtis(x: &[f64], y: &[f64]) -> f64 {
    let num: f64 = x.iter().zip(y).map(|(a, b)| (a - b).abs()).sum();
    let den: f64 = x.iter().zip(y).map(|(a, b)| a + b).sum();
    if num == 0.0 {
        0.0
    } else {
        num / den
    }
}

/// Mean-centered copy scaled to unit norm; `None` for a constant vector.
fn unit_centered(x: &[f64]) -> Option<Vec<f64>> {
    let mean = x.iter().sum::<f64>() / x.len() as f64;
    let c: Vec<f64> = x.iter().map(|v| v - mean).collect();
    let norm = c.iter().map(|v| v * v).sum::<f64>().sqrt();
    let scale = x.iter().fold(0.0_f64, |a, v| a.max(v.abs()));
    if norm <= 1e-14 * scale.max(f64::MIN_POSITIVE) * (x.len() as f64).sqrt() || norm == 0.0 {
        None
    } else {
        Some(c.into_iter().map(|v| v / norm).collect())
    }
}

fn correlation_distance(ux: &[f64], uy: &[f64]) -> f64 {
    let r: f64 = ux.iter().zip(uy).map(|(a, b)| a * b).sum();
    (1.0 - r.clamp(-1.0, 1.0)).clamp(0.0, 2.0)
}

/// Pearson correlation distance 1 − r between two vectors.
pub fn pearson_distance(x: &[f64], y: &[f64]) -> Result<f64> {
    let ux = unit_centered(x).ok_or_else(|| undefined_corr(0, "Pearson"))?;
    let uy = unit_centered(y).ok_or_else(|| undefined_corr(1, "Pearson"))?;
    Ok(correlation_distance(&ux, &uy))
}

/// Spearman correlation distance: Pearson distance between rank vectors.
pub fn spearman_distance(x: &[f64], y: &[f64]) -> Result<f64> {
    pearson_distance(&spearman_ranks(x), &spearman_ranks(y))
}

/// Ranks with rank 1 for the largest value; ties share their mean position.
pub fn spearman_ranks(x: &[f64]) -> Vec<f64> {
    let mut order: Vec<usize> = (0..x.len()).collect();
    order.sort_by(|&a, &b| x[b].total_cmp(&x[a]));
    let mut ranks = vec![0.0; x.len()];
    let mut start = 0;
    while start < order.len() {
        let mut end = start + 1;
        while end < order.len() && x[order[end]] == x[order[start]] {
            end += 1;
        }
        // Positions start+1 ..= end share their mean.
        let mean = (start + 1 + end) as f64 / 2.0;
        for &k in &order[start..end] {
            ranks[k] = mean;
        }
        start = end;
    }
    ranks
}

/// Rows of `rm` mapped through L⁻¹ where LLᵀ is the (possibly ridged) sample
/// covariance, so Euclidean distance between outputs is the Mahalanobis distance.
fn whiten(rm: &RealMatrix, opts: &RealDistanceOptions) -> Result<Vec<Vec<f64>>> {
    let (n, q) = (rm.n(), rm.q());
    if q >= n {
        return Err(GrvError::Dimension(format!(
            "Mahalanobis needs fewer features than samples (Q = {q}, N = {n})"
        )));
    }
    let cov = sample_covariance(rm.values());
    let eig = SymmetricEigen::try_new(cov.clone(), f64::EPSILON, 10_000)
        .ok_or_else(|| GrvError::Numeric("covariance eigensolver did not converge".into()))?;
    let max = eig.eigenvalues.max();
    let min = eig.eigenvalues.min();
    let condition = if min > 0.0 { max / min } else { f64::INFINITY };
    let cov = if condition > MAX_CONDITION {
        let Some(lambda) = opts.mahalanobis_ridge else {
            return Err(GrvError::Numeric(format!(
                "Mahalanobis covariance is singular or ill-conditioned (condition number {condition:.3e} > {MAX_CONDITION:.0e})"
            )));
        };
        let ridge = lambda * cov.trace() / q as f64;
        if ridge <= 0.0 {
            return Err(GrvError::Numeric(format!(
                "Mahalanobis covariance is zero (condition number {condition:.3e}); ridge cannot regularize it"
            )));
        }
        cov + DMatrix::identity(q, q) * ridge
    } else {
        cov
    };
    let chol = Cholesky::new(cov).ok_or_else(|| {
        GrvError::Numeric(format!(
            "Mahalanobis covariance is not positive definite (condition number {condition:.3e})"
        ))
    })?;
    let l = chol.l();
    let white = l
        .solve_lower_triangular(&rm.values().transpose())
        .ok_or_else(|| GrvError::Numeric("triangular solve failed".into()))?;
    Ok((0..n)
        .map(|i| white.column(i).iter().copied().collect())
        .collect())
}

/// Q×Q sample covariance with the N − 1 denominator.
pub fn sample_covariance(x: &DMatrix<f64>) -> DMatrix<f64> {
    let n = x.nrows();
    let means = x.row_mean();
    let centered = DMatrix::from_fn(n, x.ncols(), |i, j| x[(i, j)] - means[j]);
    (centered.transpose() * &centered) / (n as f64 - 1.0)
}

/// Number of histogram bins for a vector of length `p`: the integer part of √p.
pub fn nmi_bin_count(p: usize) -> usize {
    ((p as f64).sqrt().floor() as usize).max(1)
}

/// NMI distance and whether the degenerate fallback was used.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NmiDistance {
    pub distance: f64,
    /// Both marginal entropies were zero; `distance` is set to 1.
    pub degenerate: bool,
}

fn bin_indices(x: &[f64], bins: usize) -> Vec<usize> {
    let (lo, hi) = x
        .iter()
        .fold((f64::INFINITY, f64::NEG_INFINITY), |(l, h), &v| {
            (l.min(v), h.max(v))
        });
    if hi <= lo {
        return vec![0; x.len()];
    }
    let width = hi - lo;
    x.iter()
        .map(|&v| {
            // Right-closed bins (lo + (k-1)w, lo + kw]; the minimum joins bin 0.
            let t = (v - lo) / width * bins as f64;
            (t.ceil() as usize).saturating_sub(1).min(bins - 1)
        })
        .collect()
}

fn entropy(counts: &[usize], total: usize) -> f64 {
    let total = total as f64;
    counts
        .iter()
        .filter(|&&c| c > 0)
        .map(|&c| {
            let p = c as f64 / total;
            -p * p.ln()
        })
        .sum()
}

/// 1 − (E(x) + E(y) − E(x,y)) / max{E(x), E(y)} from ⌊√P⌋-bin histograms.
pub fn nmi_distance(x: &[f64], y: &[f64]) -> NmiDistance {
    assert_eq!(x.len(), y.len(), "NMI vectors must have equal length");
    let p = x.len();
    let bins = nmi_bin_count(p);
    let bx = bin_indices(x, bins);
    let by = bin_indices(y, bins);
    let mut cx = vec![0; bins];
    let mut cy = vec![0; bins];
    let mut cxy = vec![0; bins * bins];
    for (&a, &b) in bx.iter().zip(&by) {
        cx[a] += 1;
        cy[b] += 1;
        cxy[a * bins + b] += 1;
    }
    let ex = entropy(&cx, p);
    let ey = entropy(&cy, p);
    let exy = entropy(&cxy, p);
    let max = ex.max(ey);
    if max == 0.0 {
        return NmiDistance {
            distance: 1.0,
            degenerate: true,
        };
    }
    let nmi = (ex + ey - exy) / max;
    NmiDistance {
        distance: (1.0 - nmi).clamp(0.0, 1.0),
        degenerate: false,
    }
}
