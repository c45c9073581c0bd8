//! Analytic and permutation p-values for the GRV and Mantel statistics.

mod moments;
mod partitions;
pub mod pearson3;
mod permutation;

use serde::{Deserialize, Serialize};

#[cfg(test)]
pub(crate) use moments::for_each_permutation;
pub use moments::{
    moments_from_profiles, permutation_moments_closed_form, permutation_moments_exhaustive,
    MomentProfile, PermutationMoments, DEGENERACY_RATIO, MAX_EXHAUSTIVE_N,
};
pub use pearson3::{pearson3_cdf, pearson3_pdf, pearson3_sf, PearsonIIINull};
pub use permutation::{
    analytic_from_profiles, analytic_null, grv_permutation_null, grv_pvalue_analytic,
    grv_pvalue_exhaustive, grv_pvalue_permutation, grv_pvalue_permutation_with,
    mantel_pvalue_exhaustive, mantel_pvalue_permutation, mantel_pvalue_permutation_with,
    PermutationOptions,
};

/// How a p-value was obtained.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Method {
    Analytic,
    MonteCarlo,
    Exhaustive,
}

impl std::fmt::Display for Method {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            Method::Analytic => "analytic",
            Method::MonteCarlo => "monte_carlo",
            Method::Exhaustive => "exhaustive",
        })
    }
}

/// Outcome of one association test.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TestResult {
    pub statistic: f64,
    pub p_value: f64,
    pub method: Method,
    /// Permutations actually evaluated; 0 for the analytic method.
    pub n_permutations: u64,
    /// Seed of the permutation streams (Monte Carlo only).
    pub seed: Option<u64>,
}
