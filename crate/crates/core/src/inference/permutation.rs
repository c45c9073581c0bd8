//! Analytic p-values and the permutation oracles.

use nalgebra::DMatrix;
use rand::seq::SliceRandom;

use super::moments::{
    check_exhaustive_budget, enumerate_traces, moments_from_profiles, MomentProfile,
};
use super::pearson3::PearsonIIINull;
use super::{Method, TestResult};
use crate::association::{grv, mantel, standardized_upper, GrvValue};
use crate::error::{GrvError, Result};
use crate::matrices::{DistanceMatrix, GramMatrix};
use crate::rng::stream;

/// Σᵢⱼ A[i,j]·B[π(i),π(j)] for symmetric A and B.
pub(crate) fn permuted_trace(a: &DMatrix<f64>, b: &DMatrix<f64>, perm: &[usize]) -> f64 {
    let n = a.nrows();
    let a = a.as_slice();
    let b = b.as_slice();
    let mut off = 0.0;
    let mut diag = 0.0;
    for j in 0..n {
        let a_col = &a[j * n..j * n + j + 1];
        let b_col = &b[perm[j] * n..(perm[j] + 1) * n];
        let mut s = 0.0;
        for (i, &x) in a_col[..j].iter().enumerate() {
            s += x * b_col[perm[i]];
        }
        off += s;
        diag += a_col[j] * b_col[perm[j]];
    }
    2.0 * off + diag
}

/// Tolerance for counting a permuted statistic as tied with the observed one.
fn tie_tolerance(a: &DMatrix<f64>, b: &DMatrix<f64>) -> f64 {
    1e-10 * a.norm() * b.norm()
}

/// Worker count for permutation loops. `None` uses the global pool.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct PermutationOptions {
    pub workers: Option<usize>,
}

#[cfg(feature = "parallel")]
fn run_with_workers<T: Send, F: FnOnce() -> T + Send>(workers: Option<usize>, f: F) -> Result<T> {
    match workers {
        None => Ok(f()),
        Some(w) => {
            let pool = rayon::ThreadPoolBuilder::new()
                .num_threads(w.max(1))
                .build()
                .map_err(|e| GrvError::Numeric(format!("cannot start worker pool: {e}")))?;
            Ok(pool.install(f))
        }
    }
}

#[cfg(not(feature = "parallel"))]
fn run_with_workers<T, F: FnOnce() -> T>(_workers: Option<usize>, f: F) -> Result<T> {
    Ok(f())
}

/// T for permutation `index` of the stream family under `seed`.
fn sampled_trace(a: &DMatrix<f64>, b: &DMatrix<f64>, seed: u64, index: u64) -> f64 {
    let mut perm: Vec<usize> = (0..a.nrows()).collect();
    perm.shuffle(&mut stream(seed, index));
    permuted_trace(a, b, &perm)
}

/// Count of sampled traces ≥ threshold. Each permutation owns its stream, so the
/// count is identical for any worker count.
fn count_at_least(
    a: &DMatrix<f64>,
    b: &DMatrix<f64>,
    threshold: f64,
    n_perm: u64,
    seed: u64,
    opts: PermutationOptions,
) -> Result<u64> {
    const CHUNK: u64 = 1024;
    let chunks = n_perm.div_ceil(CHUNK) as usize;
    let counts = run_with_workers(opts.workers, || {
        crate::par_map(chunks, |c| {
            let start = c as u64 * CHUNK;
            let end = (start + CHUNK).min(n_perm);
            (start..end)
                .filter(|&k| sampled_trace(a, b, seed, k) >= threshold)
                .count() as u64
        })
    })?;
    Ok(counts.iter().sum())
}

fn check_n_perm(n_perm: u64) -> Result<()> {
    if n_perm == 0 {
        return Err(GrvError::Validation("n_perm must be at least 1".into()));
    }
    Ok(())
}

/// Fitted Pearson III null for the pair.
pub fn analytic_null(gx: &GramMatrix, gy: &GramMatrix) -> Result<PearsonIIINull> {
    let value = grv(gx, gy)?;
    null_from_profiles(&MomentProfile::of(gx), &MomentProfile::of(gy), &value)
}

fn null_from_profiles(
    px: &MomentProfile,
    py: &MomentProfile,
    value: &GrvValue,
) -> Result<PearsonIIINull> {
    let moments = moments_from_profiles(px, py)?;
    if moments.degenerate {
        return Err(GrvError::Degenerate(format!(
            "permutation variance {:e} is numerically zero; the analytic null is undefined, \
             use a permutation test instead",
            moments.sigma2
        )));
    }
    Ok(PearsonIIINull::new(&moments, value.norm_product))
}

/// Analytic right-tailed p-value for an observed GRV from precomputed profiles.
pub fn analytic_from_profiles(
    px: &MomentProfile,
    py: &MomentProfile,
    value: &GrvValue,
) -> Result<TestResult> {
    let null = null_from_profiles(px, py, value)?;
    Ok(TestResult {
        statistic: value.value,
        p_value: null.sf(value.value),
        method: Method::Analytic,
        n_permutations: 0,
        seed: None,
    })
}

/// GRV test with the Pearson III approximation to the permutation null.
pub fn grv_pvalue_analytic(gx: &GramMatrix, gy: &GramMatrix) -> Result<TestResult> {
    let value = grv(gx, gy)?;
    analytic_from_profiles(&MomentProfile::of(gx), &MomentProfile::of(gy), &value)
}

/// Monte Carlo GRV test with the add-one rule.
pub fn grv_pvalue_permutation(
    gx: &GramMatrix,
    gy: &GramMatrix,
    n_perm: u64,
    seed: u64,
) -> Result<TestResult> {
    grv_pvalue_permutation_with(gx, gy, n_perm, seed, PermutationOptions::default())
}

pub fn grv_pvalue_permutation_with(
    gx: &GramMatrix,
    gy: &GramMatrix,
    n_perm: u64,
    seed: u64,
    opts: PermutationOptions,
) -> Result<TestResult> {
    check_n_perm(n_perm)?;
    let value = grv(gx, gy)?;
    let (a, b) = (gx.values(), gy.values());
    let threshold = value.trace - tie_tolerance(a, b);
    let count = count_at_least(a, b, threshold, n_perm, seed, opts)?;
    Ok(TestResult {
        statistic: value.value,
        p_value: (1 + count) as f64 / (n_perm + 1) as f64,
        method: Method::MonteCarlo,
        n_permutations: n_perm,
        seed: Some(seed),
    })
}

/// Exact GRV permutation p-value over all N! permutations (N ≤ 9).
pub fn grv_pvalue_exhaustive(gx: &GramMatrix, gy: &GramMatrix) -> Result<TestResult> {
    let value = grv(gx, gy)?;
    check_exhaustive_budget(gx.n())?;
    let (a, b) = (gx.values(), gy.values());
    exhaustive_result(
        value.value,
        enumerate_traces(a, b),
        value.trace - tie_tolerance(a, b),
    )
}

fn exhaustive_result(statistic: f64, traces: Vec<f64>, threshold: f64) -> Result<TestResult> {
    let total = traces.len() as u64;
    let count = traces.iter().filter(|&&t| t >= threshold).count() as u64;
    Ok(TestResult {
        statistic,
        p_value: count as f64 / total as f64,
        method: Method::Exhaustive,
        n_permutations: total,
        seed: None,
    })
}

/// Sampled null GRV values, one per permutation stream.
pub fn grv_permutation_null(
    gx: &GramMatrix,
    gy: &GramMatrix,
    n_perm: u64,
    seed: u64,
) -> Result<Vec<f64>> {
    let value = grv(gx, gy)?;
    let (a, b) = (gx.values(), gy.values());
    Ok(crate::par_map(n_perm as usize, |k| {
        sampled_trace(a, b, seed, k as u64) / value.norm_product
    }))
}

/// Off-diagonal standardized distances as a symmetric matrix with zero diagonal.
/// Σᵢⱼ Sx[i,j]·Sy[π(i),π(j)] = 2(A − 1)·r_M.
fn standardized_matrix(d: &DistanceMatrix) -> Result<DMatrix<f64>> {
    let upper = standardized_upper(d)?;
    let n = d.n();
    let mut m = DMatrix::zeros(n, n);
    // Row-by-row, matching DistanceMatrix::upper_triangle.
    let mut it = upper.into_iter();
    for i in 0..n {
        for j in (i + 1)..n {
            let v = it.next().expect("upper triangle length");
            m[(i, j)] = v;
            m[(j, i)] = v;
        }
    }
    Ok(m)
}

fn mantel_kernel(
    dx: &DistanceMatrix,
    dy: &DistanceMatrix,
) -> Result<(f64, DMatrix<f64>, DMatrix<f64>, f64)> {
    let observed = mantel(dx, dy)?;
    let sx = standardized_matrix(dx)?;
    let sy = standardized_matrix(dy)?;
    let scale = 2.0 * (observed.pairs as f64 - 1.0);
    Ok((observed.value, sx, sy, scale))
}

/// Monte Carlo Mantel test with the add-one rule.
pub fn mantel_pvalue_permutation(
    dx: &DistanceMatrix,
    dy: &DistanceMatrix,
    n_perm: u64,
    seed: u64,
) -> Result<TestResult> {
    mantel_pvalue_permutation_with(dx, dy, n_perm, seed, PermutationOptions::default())
}

pub fn mantel_pvalue_permutation_with(
    dx: &DistanceMatrix,
    dy: &DistanceMatrix,
    n_perm: u64,
    seed: u64,
    opts: PermutationOptions,
) -> Result<TestResult> {
    check_n_perm(n_perm)?;
    let (value, sx, sy, scale) = mantel_kernel(dx, dy)?;
    let threshold = value * scale - tie_tolerance(&sx, &sy);
    let count = count_at_least(&sx, &sy, threshold, n_perm, seed, opts)?;
    Ok(TestResult {
        statistic: value,
        p_value: (1 + count) as f64 / (n_perm + 1) as f64,
        method: Method::MonteCarlo,
        n_permutations: n_perm,
        seed: Some(seed),
    })
}

/// Exact Mantel permutation p-value over all N! permutations (N ≤ 9).
pub fn mantel_pvalue_exhaustive(dx: &DistanceMatrix, dy: &DistanceMatrix) -> Result<TestResult> {
    let (value, sx, sy, scale) = mantel_kernel(dx, dy)?;
    check_exhaustive_budget(dx.n())?;
    let threshold = value * scale - tie_tolerance(&sx, &sy);
    exhaustive_result(value, enumerate_traces(&sx, &sy), threshold)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::matrices::{gower_center, Metricity};
    use rand::Rng;

    fn random_points(n: usize, seed: u64) -> DistanceMatrix {
        let mut rng = stream(seed, 0);
        let pts: Vec<(f64, f64)> = (0..n).map(|_| (rng.random(), rng.random())).collect();
        DistanceMatrix::from_fn(n, Metricity::Metric, |i, j| {
            ((pts[i].0 - pts[j].0).powi(2) + (pts[i].1 - pts[j].1).powi(2)).sqrt()
        })
        .unwrap()
    }

    #[test]
    fn permuted_trace_matches_naive() {
        let a = gower_center(&random_points(7, 1)).unwrap();
        let b = gower_center(&random_points(7, 2)).unwrap();
        let perm = [3, 0, 6, 1, 5, 2, 4];
        let mut naive = 0.0;
        for i in 0..7 {
            for j in 0..7 {
                naive += a.values()[(i, j)] * b.values()[(perm[i], perm[j])];
            }
        }
        assert!((permuted_trace(a.values(), b.values(), &perm) - naive).abs() < 1e-14);
    }

    #[test]
    fn mantel_kernel_reproduces_statistic() {
        let dx = random_points(8, 3);
        let dy = random_points(8, 4);
        let (value, sx, sy, scale) = mantel_kernel(&dx, &dy).unwrap();
        let identity: Vec<usize> = (0..8).collect();
        assert!((permuted_trace(&sx, &sy, &identity) / scale - value).abs() < 1e-13);
    }

    #[test]
    fn add_one_rule_bounds() {
        let g = gower_center(&random_points(12, 5)).unwrap();
        let r = grv_pvalue_permutation(&g, &g, 999, 11).unwrap();
        assert!(r.p_value >= 1.0 / 1000.0 && r.p_value <= 1.0);
        assert_eq!(r.n_permutations, 999);
        assert_eq!(r.seed, Some(11));
        assert!(grv_pvalue_permutation(&g, &g, 0, 11).is_err());
    }

    #[test]
    fn serialized_method_tags() {
        let g = gower_center(&random_points(6, 6)).unwrap();
        let json = serde_json::to_string(&grv_pvalue_analytic(&g, &g).unwrap()).unwrap();
        assert!(json.contains("\"method\":\"analytic\""));
        assert!(json.contains("\"n_permutations\":0"));
        let json = serde_json::to_string(&grv_pvalue_permutation(&g, &g, 10, 1).unwrap()).unwrap();
        assert!(json.contains("\"method\":\"monte_carlo\""));
    }
}
