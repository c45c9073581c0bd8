//! Computations behind the browser demo, independent of the JS bindings.

use grv::association::{grv, mantel};
use grv::distances::{pairwise_genotype, pairwise_real, DistanceMeasure};
use grv::inference::{analytic_null, grv_permutation_null, pearson3_pdf};
use grv::matrices::{gower_center, DistanceMatrix};
use grv::simulation::{generate_eqtl, EqtlConfig, PairedDataset};
use grv::{GrvError, Result};
use serde::{Deserialize, Serialize};

/// A synthetic genotype/expression pair and the measures applied to it.
#[derive(Debug, Clone, Deserialize)]
#[serde(default)]
pub struct DatasetRequest {
    pub n: usize,
    pub p: usize,
    pub q: usize,
    pub associated: bool,
    pub seed: u64,
    pub gen_measure: String,
    pub gex_measure: String,
}

impl Default for DatasetRequest {
    fn default() -> Self {
        Self {
            n: 40,
            p: 2,
            q: 10,
            associated: true,
            seed: 1,
            gen_measure: "ibs".into(),
            gex_measure: "mahalanobis".into(),
        }
    }
}

impl DatasetRequest {
    fn distances(&self) -> Result<(DistanceMatrix, DistanceMatrix)> {
        if self.n > 200 {
            return Err(GrvError::Validation("the demo caps N at 200".into()));
        }
        let gen: DistanceMeasure = self.gen_measure.parse()?;
        let gex: DistanceMeasure = self.gex_measure.parse()?;
        let cfg = EqtlConfig::new(self.n, self.p, self.q, self.associated, self.seed);
        cfg.validate()?;
        let PairedDataset {
            genotypes,
            expression,
            ..
        } = generate_eqtl(&cfg)?;
        Ok((
            pairwise_genotype(&genotypes, gen)?,
            pairwise_real(&expression, gex)?,
        ))
    }
}

#[derive(Debug, Clone, Deserialize)]
#[serde(default)]
pub struct NullRequest {
    #[serde(flatten)]
    pub data: DatasetRequest,
    pub n_perm: u64,
    pub bins: usize,
}

impl Default for NullRequest {
    fn default() -> Self {
        Self {
            data: DatasetRequest::default(),
            n_perm: 2000,
            bins: 40,
        }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct NullComparison {
    pub statistic: f64,
    pub p_analytic: f64,
    /// Add-one Monte Carlo p-value from the sampled null.
    pub p_permutation: f64,
    pub null_mean: f64,
    pub null_sd: f64,
    pub gamma: f64,
    /// (GRV, density) pairs of the Pearson III approximation.
    pub curve: Vec<[f64; 2]>,
    pub bin_edges: Vec<f64>,
    /// Histogram of permuted GRV values, normalized to integrate to 1.
    pub bin_density: Vec<f64>,
}

/// Analytic null density against a histogram of permuted statistics.
pub fn null_comparison(req: &NullRequest) -> Result<NullComparison> {
    if req.n_perm == 0 || req.n_perm > 100_000 || req.bins == 0 {
        return Err(GrvError::Validation(
            "need 1..=100000 permutations and at least one bin".into(),
        ));
    }
    let (dx, dy) = req.data.distances()?;
    let (gx, gy) = (gower_center(&dx)?, gower_center(&dy)?);
    let value = grv(&gx, &gy)?.value;
    let null = analytic_null(&gx, &gy)?;
    let sample = grv_permutation_null(&gx, &gy, req.n_perm, req.data.seed ^ 0x5eed)?;

    let lo = sample.iter().copied().fold(value, f64::min);
    let hi = sample.iter().copied().fold(value, f64::max);
    let pad = 0.05 * (hi - lo).max(1e-12);
    let (lo, hi) = (lo - pad, hi + pad);
    let width = (hi - lo) / req.bins as f64;
    let mut counts = vec![0usize; req.bins];
    for &s in &sample {
        counts[(((s - lo) / width) as usize).min(req.bins - 1)] += 1;
    }
    let total = sample.len() as f64;
    let tie = 1e-10 * value.abs().max(1e-12);
    let hits = sample.iter().filter(|&&s| s >= value - tie).count();

    let points = 200;
    let curve = (0..=points)
        .map(|i| {
            let x = lo + (hi - lo) * i as f64 / points as f64;
            [x, null.pdf(x)]
        })
        .collect();
    Ok(NullComparison {
        statistic: value,
        p_analytic: null.sf(value),
        p_permutation: (1 + hits) as f64 / (total + 1.0),
        null_mean: null.mean(),
        null_sd: null.sd(),
        gamma: null.gamma,
        curve,
        bin_edges: (0..=req.bins).map(|i| lo + width * i as f64).collect(),
        bin_density: counts.iter().map(|&c| c as f64 / (total * width)).collect(),
    })
}

#[derive(Debug, Clone, Serialize)]
pub struct Standardizations {
    pub grv: f64,
    pub mantel: f64,
    /// (x, y) pairs of Gram entries scaled by their Frobenius norms, i ≤ j.
    pub gram_pairs: Vec<[f64; 2]>,
    /// (x, y) pairs of standardized upper-triangular distances, i < j.
    pub distance_pairs: Vec<[f64; 2]>,
}

fn standardized(v: &[f64]) -> Vec<f64> {
    let n = v.len() as f64;
    let mean = v.iter().sum::<f64>() / n;
    let sd = (v.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1.0)).sqrt();
    v.iter().map(|x| (x - mean) / sd).collect()
}

/// The entries each statistic correlates: Gower-centered Grams for GRV,
/// standardized distances for Mantel.
pub fn standardizations(req: &DatasetRequest) -> Result<Standardizations> {
    let (dx, dy) = req.distances()?;
    let (gx, gy) = (gower_center(&dx)?, gower_center(&dy)?);
    let (nx, ny) = (gx.frobenius_norm(), gy.frobenius_norm());
    let n = dx.n();
    let gram_pairs = (0..n)
        .flat_map(|i| (i..n).map(move |j| (i, j)))
        .map(|(i, j)| [gx.values()[(i, j)] / nx, gy.values()[(i, j)] / ny])
        .collect();
    let (sx, sy) = (
        standardized(&dx.upper_triangle()),
        standardized(&dy.upper_triangle()),
    );
    Ok(Standardizations {
        grv: grv(&gx, &gy)?.value,
        mantel: mantel(&dx, &dy)?.value,
        gram_pairs,
        distance_pairs: sx.into_iter().zip(sy).map(|(a, b)| [a, b]).collect(),
    })
}

#[derive(Debug, Clone, Serialize)]
pub struct Curve {
    pub gamma: f64,
    pub points: Vec<[f64; 2]>,
}

/// Standardized Pearson III densities on [-4, 6] for each skewness.
pub fn pearson3_curves(gammas: &[f64]) -> Vec<Curve> {
    gammas
        .iter()
        .map(|&gamma| Curve {
            gamma,
            points: (0..=400)
                .map(|i| {
                    let t = -4.0 + 10.0 * i as f64 / 400.0;
                    [t, pearson3_pdf(t, gamma)]
                })
                .collect(),
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn null_comparison_is_consistent() {
        let req = NullRequest {
            n_perm: 4000,
            ..NullRequest::default()
        };
        let out = null_comparison(&req).unwrap();
        let width = out.bin_edges[1] - out.bin_edges[0];
        let mass: f64 = out.bin_density.iter().sum::<f64>() * width;
        assert!((mass - 1.0).abs() < 1e-9);
        assert_eq!(out.curve.len(), 201);
        assert!(out.p_analytic > 0.0 && out.p_analytic <= 1.0);
        assert!(out.p_permutation >= 1.0 / 4001.0);
    }

    #[test]
    fn standardization_counts() {
        let req = DatasetRequest {
            n: 12,
            ..DatasetRequest::default()
        };
        let s = standardizations(&req).unwrap();
        assert_eq!(s.gram_pairs.len(), 12 * 13 / 2);
        assert_eq!(s.distance_pairs.len(), 12 * 11 / 2);
        assert!(s.grv.abs() <= 1.0 && s.mantel.abs() <= 1.0);
    }

    #[test]
    fn curves_cover_each_gamma() {
        let c = pearson3_curves(&[-1.0, 0.0, 0.5]);
        assert_eq!(c.len(), 3);
        assert!(c.iter().all(|c| c.points.len() == 401));
        // Positive skew puts no mass below -2/γ.
        assert_eq!(pearson3_curves(&[0.5])[0].points[0][1], 0.0);
    }

    #[test]
    fn rejects_unknown_measures() {
        let req = DatasetRequest {
            gex_measure: "nope".into(),
            ..DatasetRequest::default()
        };
        assert!(standardizations(&req).is_err());
    }
}
