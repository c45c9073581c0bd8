//! Distance matrices, Gower double-centering, and principal coordinates.

use nalgebra::{DMatrix, SymmetricEigen};
use serde::{Deserialize, Serialize};

use crate::error::{GrvError, Result};

/// Whether a distance measure satisfies the triangle inequality.
///
/// Declared by the producing measure, never inferred from the values.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Metricity {
    Metric,
    SemiMetric,
    Unknown,
}

/// Structural tolerance used for symmetry, diagonal and centering checks.
pub fn structural_tolerance(n: usize, max_abs: f64) -> f64 {
    1e-10 * n as f64 * max_abs
}

fn max_abs(m: &DMatrix<f64>) -> f64 {
    m.iter().fold(0.0_f64, |acc, v| acc.max(v.abs()))
}

/// An N×N symmetric, nonnegative dissimilarity matrix with zero diagonal.
#[derive(Debug, Clone, PartialEq)]
pub struct DistanceMatrix {
    values: DMatrix<f64>,
    metricity: Metricity,
}

impl DistanceMatrix {
    /// Validate and take ownership of `values`.
    ///
    /// Asymmetry, a nonzero diagonal or negative entries beyond
    /// [`structural_tolerance`] are rejected. Deviations inside the tolerance are
    /// repaired: the matrix is symmetrized, the diagonal set to zero and tiny
    /// negatives clamped.
    pub fn new(mut values: DMatrix<f64>, metricity: Metricity) -> Result<Self> {
        let n = values.nrows();
        if values.ncols() != n {
            return Err(GrvError::Dimension(format!(
                "distance matrix must be square, got {}x{}",
                n,
                values.ncols()
            )));
        }
        if n == 0 {
            return Err(GrvError::Dimension("distance matrix is empty".into()));
        }
        if let Some(bad) = values.iter().find(|v| !v.is_finite()) {
            return Err(GrvError::Validation(format!(
                "distance matrix contains non-finite value {bad}"
            )));
        }
        let tol = structural_tolerance(n, max_abs(&values));
        for i in 0..n {
            if values[(i, i)].abs() > tol {
                return Err(GrvError::Validation(format!(
                    "diagonal entry ({i},{i}) = {} is not zero",
                    values[(i, i)]
                )));
            }
            values[(i, i)] = 0.0;
            for j in (i + 1)..n {
                let (a, b) = (values[(i, j)], values[(j, i)]);
                if (a - b).abs() > tol {
                    return Err(GrvError::Validation(format!(
                        "asymmetric entries ({i},{j}) = {a} and ({j},{i}) = {b}"
                    )));
                }
                let v = 0.5 * (a + b);
                if v < -tol {
                    return Err(GrvError::Validation(format!(
                        "negative distance {v} at ({i},{j})"
                    )));
                }
                let v = v.max(0.0);
                values[(i, j)] = v;
                values[(j, i)] = v;
            }
        }
        Ok(Self { values, metricity })
    }

    /// Build from the strict upper triangle, filled by `f(i, j)` for `i < j`.
    pub fn from_fn<F>(n: usize, metricity: Metricity, mut f: F) -> Result<Self>
    where
        F: FnMut(usize, usize) -> f64,
    {
        let mut values = DMatrix::zeros(n, n);
        for i in 0..n {
            for j in (i + 1)..n {
                let v = f(i, j);
                values[(i, j)] = v;
                values[(j, i)] = v;
            }
        }
        Self::new(values, metricity)
    }

    pub fn from_rows(rows: &[Vec<f64>], metricity: Metricity) -> Result<Self> {
        let n = rows.len();
        if let Some(r) = rows.iter().find(|r| r.len() != n) {
            return Err(GrvError::Dimension(format!(
                "distance matrix must be square: {} rows but a row of length {}",
                n,
                r.len()
            )));
        }
        Self::new(DMatrix::from_fn(n, n, |i, j| rows[i][j]), metricity)
    }

    pub fn n(&self) -> usize {
        self.values.nrows()
    }

    pub fn values(&self) -> &DMatrix<f64> {
        &self.values
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.values[(i, j)]
    }

    pub fn metricity(&self) -> Metricity {
        self.metricity
    }

    /// True when every distance is zero (identical samples).
    pub fn is_degenerate(&self) -> bool {
        self.values.iter().all(|&v| v == 0.0)
    }

    /// Multiply every distance by `a > 0`.
    pub fn scaled(&self, a: f64) -> Result<Self> {
        if !(a > 0.0 && a.is_finite()) {
            return Err(GrvError::Validation(format!(
                "scale factor must be positive and finite, got {a}"
            )));
        }
        Ok(Self {
            values: &self.values * a,
            metricity: self.metricity,
        })
    }

    /// The A = N(N-1)/2 strict upper-triangular entries, row by row.
    pub fn upper_triangle(&self) -> Vec<f64> {
        let n = self.n();
        let mut out = Vec::with_capacity(n * (n - 1) / 2);
        for i in 0..n {
            for j in (i + 1)..n {
                out.push(self.values[(i, j)]);
            }
        }
        out
    }

    /// Count triples violating the triangle inequality beyond the structural
    /// tolerance. O(N³); intended for auditing `Unknown` inputs.
    pub fn triangle_violations(&self) -> usize {
        let n = self.n();
        let tol = structural_tolerance(n, max_abs(&self.values));
        let d = &self.values;
        let mut count = 0;
        for i in 0..n {
            for j in (i + 1)..n {
                for k in 0..n {
                    if k != i && k != j && d[(i, j)] > d[(i, k)] + d[(k, j)] + tol {
                        count += 1;
                    }
                }
            }
        }
        count
    }
}

/// Gower's centered inner-product matrix G = -½ C Δ² C.
#[derive(Debug, Clone, PartialEq)]
pub struct GramMatrix {
    values: DMatrix<f64>,
    frobenius_norm: f64,
    metricity: Metricity,
}

impl GramMatrix {
    /// Accept an already centered symmetric matrix (e.g. read from disk).
    pub fn from_centered(values: DMatrix<f64>, metricity: Metricity) -> Result<Self> {
        let n = values.nrows();
        if values.ncols() != n || n < 2 {
            return Err(GrvError::Dimension(format!(
                "Gram matrix must be square with N >= 2, got {}x{}",
                n,
                values.ncols()
            )));
        }
        if let Some(bad) = values.iter().find(|v| !v.is_finite()) {
            return Err(GrvError::Validation(format!(
                "Gram matrix contains non-finite value {bad}"
            )));
        }
        let tol = structural_tolerance(n, max_abs(&values));
        for i in 0..n {
            for j in (i + 1)..n {
                if (values[(i, j)] - values[(j, i)]).abs() > tol {
                    return Err(GrvError::Validation(format!(
                        "Gram matrix is not symmetric at ({i},{j})"
                    )));
                }
            }
            let row: f64 = values.row(i).iter().sum();
            if row.abs() > tol {
                return Err(GrvError::Validation(format!(
                    "Gram matrix row {i} sums to {row}, expected 0"
                )));
            }
        }
        let frobenius_norm = values.norm();
        Ok(Self {
            values,
            frobenius_norm,
            metricity,
        })
    }

    pub fn n(&self) -> usize {
        self.values.nrows()
    }

    pub fn values(&self) -> &DMatrix<f64> {
        &self.values
    }

    pub fn frobenius_norm(&self) -> f64 {
        self.frobenius_norm
    }

    /// Metricity of the distance the matrix was centered from.
    pub fn metricity(&self) -> Metricity {
        self.metricity
    }

    /// A zero matrix carries no configuration and cannot enter a GRV ratio.
    pub fn is_degenerate(&self) -> bool {
        self.frobenius_norm == 0.0
    }

    /// Simultaneously permute rows and columns: out[i][j] = G[perm[i]][perm[j]].
    pub fn permuted(&self, perm: &[usize]) -> Result<Self> {
        let n = self.n();
        check_permutation(perm, n)?;
        Ok(Self {
            values: DMatrix::from_fn(n, n, |i, j| self.values[(perm[i], perm[j])]),
            frobenius_norm: self.frobenius_norm,
            metricity: self.metricity,
        })
    }

    /// Eigenvalues in descending order.
    pub fn eigenvalues(&self) -> Result<Vec<f64>> {
        let eig = symmetric_eigen(&self.values)?;
        let mut ev: Vec<f64> = eig.eigenvalues.iter().copied().collect();
        ev.sort_by(|a, b| b.total_cmp(a));
        Ok(ev)
    }
}

pub(crate) fn check_permutation(perm: &[usize], n: usize) -> Result<()> {
    if perm.len() != n {
        return Err(GrvError::Dimension(format!(
            "permutation has length {}, expected {n}",
            perm.len()
        )));
    }
    let mut seen = vec![false; n];
    for &p in perm {
        if p >= n || std::mem::replace(&mut seen[p], true) {
            return Err(GrvError::Validation("not a permutation".into()));
        }
    }
    Ok(())
}

fn symmetric_eigen(m: &DMatrix<f64>) -> Result<SymmetricEigen<f64, nalgebra::Dyn>> {
    SymmetricEigen::try_new(m.clone(), f64::EPSILON, 10_000).ok_or_else(|| {
        GrvError::Numeric(format!(
            "symmetric eigensolver did not converge for a {}x{} matrix",
            m.nrows(),
            m.ncols()
        ))
    })
}

/// G = -½ C (Δ∘Δ) C.
///
/// An all-zero Δ is accepted and yields a zero (degenerate) Gram matrix; GRV
/// rejects it downstream.
pub fn gower_center(d: &DistanceMatrix) -> Result<GramMatrix> {
    let n = d.n();
    if n < 2 {
        return Err(GrvError::Dimension(format!(
            "Gower centering needs N >= 2, got {n}"
        )));
    }
    let sq = d.values().map(|v| v * v);
    let row_means: Vec<f64> = (0..n).map(|i| sq.row(i).sum() / n as f64).collect();
    let grand = row_means.iter().sum::<f64>() / n as f64;
    let mut g = DMatrix::zeros(n, n);
    for i in 0..n {
        for j in i..n {
            let v = -0.5 * (sq[(i, j)] - row_means[i] - row_means[j] + grand);
            g[(i, j)] = v;
            g[(j, i)] = v;
        }
    }
    let frobenius_norm = g.norm();
    Ok(GramMatrix {
        values: g,
        frobenius_norm,
        metricity: d.metricity(),
    })
}

/// Classical MDS embedding of a Gram matrix.
#[derive(Debug, Clone)]
pub struct PrincipalCoordinates {
    /// N×N; row i is the embedding of sample i. Axes of non-positive eigenvalues are zero.
    pub coords: DMatrix<f64>,
    /// All eigenvalues, descending.
    pub eigenvalues: Vec<f64>,
    /// Eigenvalues below the negative tolerance (semi-metric input).
    pub negative_eigenvalues: Vec<f64>,
    /// ||G - X̃X̃ᵀ||_F; zero up to rounding when G is positive semi-definite.
    pub reconstruction_error: f64,
}

impl PrincipalCoordinates {
    pub fn n(&self) -> usize {
        self.coords.nrows()
    }

    /// Pairwise Euclidean distances between embedded points.
    pub fn embedded_distances(&self) -> DMatrix<f64> {
        let n = self.n();
        DMatrix::from_fn(n, n, |i, j| {
            (self.coords.row(i) - self.coords.row(j)).norm()
        })
    }
}

pub fn principal_coordinates(g: &GramMatrix) -> Result<PrincipalCoordinates> {
    let n = g.n();
    let eig = symmetric_eigen(g.values())?;
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| eig.eigenvalues[b].total_cmp(&eig.eigenvalues[a]));
    let eigenvalues: Vec<f64> = order.iter().map(|&k| eig.eigenvalues[k]).collect();
    let tol = structural_tolerance(n, eigenvalues.iter().fold(0.0_f64, |a, v| a.max(v.abs())));
    let mut coords = DMatrix::zeros(n, n);
    for (axis, &k) in order.iter().enumerate() {
        let lambda = eig.eigenvalues[k];
        if lambda > tol {
            let s = lambda.sqrt();
            for i in 0..n {
                coords[(i, axis)] = eig.eigenvectors[(i, k)] * s;
            }
        }
    }
    let negative_eigenvalues = eigenvalues.iter().copied().filter(|&l| l < -tol).collect();
    let reconstruction_error = (g.values() - &coords * coords.transpose()).norm();
    Ok(PrincipalCoordinates {
        coords,
        eigenvalues,
        negative_eigenvalues,
        reconstruction_error,
    })
}
