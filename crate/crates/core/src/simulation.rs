//! Synthetic eQTL-style paired data and Monte Carlo power and size estimates.
//!
//! Genotypes follow Hardy-Weinberg proportions for minor allele frequencies
//! drawn uniformly from `maf_range`. With z the per-sample minor allele total,
//! expression is y = z·1 + e under the alternative and y = e under the null,
//! where e ~ N(μ, Σ), μ has U(0, 1) entries and Σ is a Wishart draw.

use nalgebra::{DMatrix, DVector};
use rand::Rng;
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::distances::{
    pairwise_genotype, pairwise_real, DistanceMeasure, GenotypeMatrix, RealMatrix,
};
use crate::error::{GrvError, Result};
use crate::inference::{grv_pvalue_analytic, grv_pvalue_permutation, mantel_pvalue_permutation};
use crate::matrices::gower_center;
use crate::rng::{derive_seed, stream};

/// Parameters of the synthetic generator.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EqtlConfig {
    pub n: usize,
    pub p: usize,
    pub q: usize,
    pub maf_range: (f64, f64),
    /// Expression depends on genotype (`true`) or is pure noise.
    pub associated: bool,
    pub seed: u64,
    /// Wishart degrees of freedom for Σ; `None` means Q + 1. Scale is the identity.
    pub wishart_df: Option<usize>,
    /// Draw μ and Σ once per run instead of once per dataset.
    pub shared_noise: bool,
}

impl EqtlConfig {
    pub fn new(n: usize, p: usize, q: usize, associated: bool, seed: u64) -> Self {
        Self {
            n,
            p,
            q,
            maf_range: (0.1, 0.5),
            associated,
            seed,
            wishart_df: None,
            shared_noise: false,
        }
    }

    pub fn wishart_df(&self) -> usize {
        self.wishart_df.unwrap_or(self.q + 1)
    }

    pub fn validate(&self) -> Result<()> {
        let (lo, hi) = self.maf_range;
        if !(lo > 0.0 && lo <= hi && hi <= 0.5) {
            return Err(GrvError::Validation(format!(
                "maf_range must satisfy 0 < low <= high <= 0.5, got ({lo}, {hi})"
            )));
        }
        if self.n < 2 || self.p == 0 || self.q == 0 {
            return Err(GrvError::Validation(format!(
                "need n >= 2, p >= 1 and q >= 1, got n = {}, p = {}, q = {}",
                self.n, self.p, self.q
            )));
        }
        if self.wishart_df() < self.q {
            return Err(GrvError::Validation(format!(
                "Wishart degrees of freedom {} below dimension {} give a singular covariance",
                self.wishart_df(),
                self.q
            )));
        }
        Ok(())
    }
}

/// Aligned genotype and expression blocks for the same samples.
#[derive(Debug, Clone, PartialEq)]
pub struct PairedDataset {
    pub genotypes: GenotypeMatrix,
    pub expression: RealMatrix,
    /// Minor allele frequency used for each SNP.
    pub mafs: Vec<f64>,
}

/// Noise mean and covariance factor.
#[derive(Debug, Clone, PartialEq)]
pub struct NoiseModel {
    pub mean: DVector<f64>,
    pub covariance: DMatrix<f64>,
    cholesky_l: DMatrix<f64>,
}

impl NoiseModel {
    pub fn draw(q: usize, df: usize, rng: &mut ChaCha8Rng) -> Result<Self> {
        let mean = DVector::from_fn(q, |_, _| rng.random::<f64>());
        let z = DMatrix::from_fn(df, q, |_, _| rng.sample::<f64, _>(StandardNormal));
        let covariance = z.transpose() * &z;
        let cholesky_l = covariance
            .clone()
            .cholesky()
            .ok_or_else(|| GrvError::Numeric("Wishart draw is not positive definite".into()))?
            .l();
        Ok(Self {
            mean,
            covariance,
            cholesky_l,
        })
    }

    fn sample(&self, rng: &mut ChaCha8Rng) -> DVector<f64> {
        let q = self.mean.len();
        let white = DVector::from_fn(q, |_, _| rng.sample::<f64, _>(StandardNormal));
        &self.mean + &self.cholesky_l * white
    }
}

fn hwe_genotype(maf: f64, u: f64) -> u8 {
    let p0 = (1.0 - maf) * (1.0 - maf);
    let p1 = 2.0 * maf * (1.0 - maf);
    if u < p0 {
        0
    } else if u < p0 + p1 {
        1
    } else {
        2
    }
}

fn generate_with(
    cfg: &EqtlConfig,
    noise: Option<&NoiseModel>,
    rng: &mut ChaCha8Rng,
) -> Result<PairedDataset> {
    let (lo, hi) = cfg.maf_range;
    let mafs: Vec<f64> = (0..cfg.p)
        .map(|_| {
            if lo == hi {
                lo
            } else {
                rng.random_range(lo..hi)
            }
        })
        .collect();
    let mut values = Vec::with_capacity(cfg.n * cfg.p);
    for _ in 0..cfg.n {
        for &m in &mafs {
            values.push(hwe_genotype(m, rng.random()));
        }
    }
    let genotypes = GenotypeMatrix::new(cfg.n, cfg.p, values)?;
    let owned;
    let noise = match noise {
        Some(n) => n,
        None => {
            owned = NoiseModel::draw(cfg.q, cfg.wishart_df(), rng)?;
            &owned
        }
    };
    let z = genotypes.row_sums();
    let mut y = DMatrix::zeros(cfg.n, cfg.q);
    for i in 0..cfg.n {
        let e = noise.sample(rng);
        let shift = if cfg.associated { z[i] } else { 0.0 };
        for k in 0..cfg.q {
            y[(i, k)] = e[k] + shift;
        }
    }
    Ok(PairedDataset {
        genotypes,
        expression: RealMatrix::new(y)?,
        mafs,
    })
}

/// One dataset from `cfg.seed`.
pub fn generate_eqtl(cfg: &EqtlConfig) -> Result<PairedDataset> {
    cfg.validate()?;
    generate_with(cfg, None, &mut stream(cfg.seed, 0))
}

/// Dataset `dataset` of run `run`; reproducible independently of other datasets.
pub fn generate_eqtl_indexed(cfg: &EqtlConfig, run: u64, dataset: u64) -> Result<PairedDataset> {
    cfg.validate()?;
    let noise = if cfg.shared_noise {
        let mut rng = stream(derive_seed(cfg.seed, &[run]), 1);
        Some(NoiseModel::draw(cfg.q, cfg.wishart_df(), &mut rng)?)
    } else {
        None
    };
    generate_with(
        cfg,
        noise.as_ref(),
        &mut stream(derive_seed(cfg.seed, &[run, dataset]), 0),
    )
}

/// Test applied to each simulated dataset.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", tag = "kind")]
pub enum PowerTest {
    GrvAnalytic,
    GrvPermutation { n_perm: u64 },
    MantelPermutation { n_perm: u64 },
}

impl PowerTest {
    pub fn name(&self) -> &'static str {
        match self {
            PowerTest::GrvAnalytic => "grv_analytic",
            PowerTest::GrvPermutation { .. } => "grv_permutation",
            PowerTest::MantelPermutation { .. } => "mantel_permutation",
        }
    }
}

/// A power or size experiment: `runs` × `datasets_per_run` simulated datasets.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PowerStudy {
    pub config: EqtlConfig,
    pub gen_measure: DistanceMeasure,
    pub gex_measure: DistanceMeasure,
    pub test: PowerTest,
    pub runs: usize,
    pub datasets_per_run: usize,
}

/// Mean and spread across runs of the per-run rejection proportion.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PowerEstimate {
    pub mean_power: f64,
    /// Sample standard deviation across runs (n − 1 denominator); 0 for one run.
    pub sd: f64,
    /// False when a single run leaves the spread undefined.
    pub sd_defined: bool,
    pub runs: usize,
    pub datasets_per_run: usize,
    pub alpha: f64,
    /// Datasets whose test failed (degenerate input, singular covariance).
    pub skipped: usize,
}

/// One dataset's p-value, or `None` when the test could not be run.
fn dataset_pvalue(study: &PowerStudy, run: u64, dataset: u64) -> Result<Option<f64>> {
    let data = generate_eqtl_indexed(&study.config, run, dataset)?;
    let outcome = (|| -> Result<f64> {
        let dx = pairwise_genotype(&data.genotypes, study.gen_measure)?;
        let dy = pairwise_real(&data.expression, study.gex_measure)?;
        let perm_seed = derive_seed(study.config.seed, &[run, dataset, 0x7e57]);
        Ok(match study.test {
            PowerTest::GrvAnalytic => {
                grv_pvalue_analytic(&gower_center(&dx)?, &gower_center(&dy)?)?.p_value
            }
            PowerTest::GrvPermutation { n_perm } => {
                grv_pvalue_permutation(&gower_center(&dx)?, &gower_center(&dy)?, n_perm, perm_seed)?
                    .p_value
            }
            PowerTest::MantelPermutation { n_perm } => {
                mantel_pvalue_permutation(&dx, &dy, n_perm, perm_seed)?.p_value
            }
        })
    })();
    match outcome {
        Ok(p) => Ok(Some(p)),
        Err(GrvError::Degenerate(_) | GrvError::Numeric(_)) => Ok(None),
        Err(e) => Err(e),
    }
}

/// All p-values, indexed `[run][dataset]`.
pub fn simulate_pvalues(study: &PowerStudy) -> Result<Vec<Vec<Option<f64>>>> {
    study.config.validate()?;
    if study.runs == 0 || study.datasets_per_run == 0 {
        return Err(GrvError::Validation(
            "runs and datasets_per_run must be at least 1".into(),
        ));
    }
    let (gen, gex) = (study.gen_measure, study.gex_measure);
    if !gen.is_genotype() || gex.is_genotype() {
        return Err(GrvError::Validation(format!(
            "expected a genotype measure and an expression measure, got {gen} and {gex}"
        )));
    }
    let per = study.datasets_per_run;
    let flat = crate::par_map(study.runs * per, |k| {
        dataset_pvalue(study, (k / per) as u64, (k % per) as u64)
    });
    let flat: Vec<Option<f64>> = flat.into_iter().collect::<Result<_>>()?;
    Ok(flat.chunks(per).map(<[_]>::to_vec).collect())
}

fn summarize(pvalues: &[Vec<Option<f64>>], alpha: f64) -> PowerEstimate {
    let runs = pvalues.len();
    let mut skipped = 0;
    let props: Vec<f64> = pvalues
        .iter()
        .map(|run| {
            let valid: Vec<f64> = run.iter().flatten().copied().collect();
            skipped += run.len() - valid.len();
            if valid.is_empty() {
                0.0
            } else {
                valid.iter().filter(|&&p| p <= alpha).count() as f64 / valid.len() as f64
            }
        })
        .collect();
    let mean = props.iter().sum::<f64>() / runs as f64;
    let sd = if runs > 1 {
        (props.iter().map(|p| (p - mean).powi(2)).sum::<f64>() / (runs - 1) as f64).sqrt()
    } else {
        0.0
    };
    PowerEstimate {
        mean_power: mean,
        sd,
        sd_defined: runs > 1,
        runs,
        datasets_per_run: pvalues.first().map_or(0, Vec::len),
        alpha,
        skipped,
    }
}

fn check_alpha(alpha: f64) -> Result<()> {
    if !(alpha > 0.0 && alpha <= 1.0) {
        return Err(GrvError::Validation(format!(
            "significance level must be in (0, 1], got {alpha}"
        )));
    }
    Ok(())
}

/// Rejection rate at `alpha` across simulated datasets.
pub fn estimate_power(study: &PowerStudy, alpha: f64) -> Result<PowerEstimate> {
    check_alpha(alpha)?;
    Ok(summarize(&simulate_pvalues(study)?, alpha))
}

/// Rejection rates under the null generator at several levels, from one set of datasets.
pub fn estimate_size(study: &PowerStudy, levels: &[f64]) -> Result<Vec<PowerEstimate>> {
    levels.iter().try_for_each(|&a| check_alpha(a))?;
    let null = PowerStudy {
        config: EqtlConfig {
            associated: false,
            ..study.config
        },
        ..*study
    };
    let pvalues = simulate_pvalues(&null)?;
    Ok(levels.iter().map(|&a| summarize(&pvalues, a)).collect())
}
