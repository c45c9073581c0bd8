//! Exact permutation moments of T = tr(Gx Gy,π).

use nalgebra::DMatrix;
use serde::Serialize;

use super::partitions::{table, ComponentCache};
use crate::error::{GrvError, Result};
use crate::matrices::GramMatrix;

/// Largest N accepted by exhaustive enumeration.
pub const MAX_EXHAUSTIVE_N: usize = 9;

/// σ² below this fraction of (‖Gx‖‖Gy‖)² is treated as zero.
pub const DEGENERACY_RATIO: f64 = 1e-24;

/// Mean, variance and skewness of T over the full permutation group.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct PermutationMoments {
    pub mu: f64,
    pub sigma2: f64,
    /// Skewness; 0 when `degenerate`.
    pub gamma: f64,
    /// T (almost) does not vary with π; no continuous null can be fitted.
    pub degenerate: bool,
}

impl PermutationMoments {
    pub fn sigma(&self) -> f64 {
        self.sigma2.sqrt()
    }

    fn from_central(mu: f64, m2: f64, m3: f64, norm_product: f64) -> Self {
        let degenerate =
            m2.is_nan() || m2 < DEGENERACY_RATIO * norm_product * norm_product || m2 <= 0.0;
        if degenerate {
            PermutationMoments {
                mu,
                sigma2: m2.max(0.0),
                gamma: 0.0,
                degenerate: true,
            }
        } else {
            PermutationMoments {
                mu,
                sigma2: m2,
                gamma: m3 / m2.powf(1.5),
                degenerate: false,
            }
        }
    }
}

/// Per-matrix summary from which moments against any partner follow in O(1).
///
/// The matrix is shifted so its diagonal and off-diagonal entries each average
/// zero; T changes by a π-independent constant, so raw moments of the shifted
/// statistic are the central moments of T.
#[derive(Debug, Clone)]
pub struct MomentProfile {
    n: usize,
    diag_mean: f64,
    offdiag_mean: f64,
    norm: f64,
    second: Vec<f64>,
    third: Vec<f64>,
}

impl MomentProfile {
    pub fn of(g: &GramMatrix) -> Self {
        Self::of_matrix(g.values(), g.frobenius_norm())
    }

    pub(crate) fn of_matrix(m: &DMatrix<f64>, norm: f64) -> Self {
        let n = m.nrows();
        let diag_mean = m.diagonal().sum() / n as f64;
        let offdiag_mean = if n > 1 {
            (m.sum() - m.diagonal().sum()) / (n * (n - 1)) as f64
        } else {
            0.0
        };
        let shifted = DMatrix::from_fn(n, n, |i, j| {
            if i == j {
                m[(i, j)] - diag_mean
            } else {
                m[(i, j)] - offdiag_mean
            }
        });
        let mut cache = ComponentCache::default();
        let second = table(2).exact_sums(&shifted, &mut cache);
        let third = table(3).exact_sums(&shifted, &mut cache);
        Self {
            n,
            diag_mean,
            offdiag_mean,
            norm,
            second,
            third,
        }
    }

    pub fn n(&self) -> usize {
        self.n
    }
}

fn falling_factorial(n: usize, k: usize) -> f64 {
    (0..k).map(|i| (n - i) as f64).product()
}

fn pattern_moment(n: usize, edges: usize, a: &[f64], b: &[f64]) -> f64 {
    let t = table(edges);
    t.blocks
        .iter()
        .zip(a.iter().zip(b))
        .filter(|(&k, _)| k <= n)
        .map(|(&k, (x, y))| x * y / falling_factorial(n, k))
        .sum()
}

/// Moments of T for the pair (x, y) from their profiles.
pub fn moments_from_profiles(x: &MomentProfile, y: &MomentProfile) -> Result<PermutationMoments> {
    if x.n != y.n {
        return Err(GrvError::Dimension(format!(
            "profiles differ in size: {} vs {}",
            x.n, y.n
        )));
    }
    let n = x.n;
    if n < 3 {
        return Err(GrvError::Dimension(format!(
            "closed-form permutation moments need N >= 3, got {n}"
        )));
    }
    if x.norm == 0.0 || y.norm == 0.0 {
        return Err(GrvError::Degenerate(
            "permutation moments need nonzero Gram matrices".into(),
        ));
    }
    let nf = n as f64;
    let mu = nf * x.diag_mean * y.diag_mean + nf * (nf - 1.0) * x.offdiag_mean * y.offdiag_mean;
    let m2 = pattern_moment(n, 2, &x.second, &y.second);
    let m3 = pattern_moment(n, 3, &x.third, &y.third);
    Ok(PermutationMoments::from_central(
        mu,
        m2,
        m3,
        x.norm * y.norm,
    ))
}

/// Exact first three permutation moments of T without enumerating permutations.
///
/// Cost is dominated by one O(N³) product per matrix; reuse a
/// [`MomentProfile`] when a Gram matrix enters several tests.
pub fn permutation_moments_closed_form(
    gx: &GramMatrix,
    gy: &GramMatrix,
) -> Result<PermutationMoments> {
    if gx.n() != gy.n() {
        return Err(GrvError::Dimension(format!(
            "Gram matrices differ in size: {} vs {}",
            gx.n(),
            gy.n()
        )));
    }
    if gx.n() < 3 {
        return Err(GrvError::Dimension(format!(
            "closed-form permutation moments need N >= 3, got {}",
            gx.n()
        )));
    }
    if gx.is_degenerate() || gy.is_degenerate() {
        return Err(GrvError::Degenerate(
            "permutation moments need nonzero Gram matrices".into(),
        ));
    }
    moments_from_profiles(&MomentProfile::of(gx), &MomentProfile::of(gy))
}

/// Visit every permutation of 0..n (Heap's algorithm).
pub(crate) fn for_each_permutation<F: FnMut(&[usize])>(n: usize, mut f: F) {
    let mut perm: Vec<usize> = (0..n).collect();
    let mut c = vec![0usize; n];
    f(&perm);
    let mut i = 1;
    while i < n {
        if c[i] < i {
            if i % 2 == 0 {
                perm.swap(0, i);
            } else {
                perm.swap(c[i], i);
            }
            f(&perm);
            c[i] += 1;
            i = 1;
        } else {
            c[i] = 0;
            i += 1;
        }
    }
}

pub(crate) fn check_exhaustive_budget(n: usize) -> Result<()> {
    if n > MAX_EXHAUSTIVE_N {
        return Err(GrvError::Budget(format!(
            "exhaustive enumeration supports N <= {MAX_EXHAUSTIVE_N}, got N = {n} ({n}! permutations)"
        )));
    }
    Ok(())
}

/// T_π for every permutation, in Heap order (identity first).
pub(crate) fn enumerate_traces(a: &DMatrix<f64>, b: &DMatrix<f64>) -> Vec<f64> {
    let n = a.nrows();
    let mut out = Vec::new();
    for_each_permutation(n, |perm| {
        out.push(super::permutation::permuted_trace(a, b, perm))
    });
    out
}

/// Moments by full enumeration of all N! simultaneous row/column permutations of Gy.
pub fn permutation_moments_exhaustive(
    gx: &GramMatrix,
    gy: &GramMatrix,
) -> Result<PermutationMoments> {
    if gx.n() != gy.n() {
        return Err(GrvError::Dimension(format!(
            "Gram matrices differ in size: {} vs {}",
            gx.n(),
            gy.n()
        )));
    }
    check_exhaustive_budget(gx.n())?;
    let traces = enumerate_traces(gx.values(), gy.values());
    let count = traces.len() as f64;
    let mu = traces.iter().sum::<f64>() / count;
    let m2 = traces.iter().map(|t| (t - mu).powi(2)).sum::<f64>() / count;
    let m3 = traces.iter().map(|t| (t - mu).powi(3)).sum::<f64>() / count;
    Ok(PermutationMoments::from_central(
        mu,
        m2,
        m3,
        gx.frobenius_norm() * gy.frobenius_norm(),
    ))
}
