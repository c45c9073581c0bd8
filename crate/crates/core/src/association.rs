//! GRV and Mantel statistics.

use serde::Serialize;

use crate::error::{GrvError, Result};
use crate::matrices::{DistanceMatrix, GramMatrix, Metricity};

/// Eigenvalue bounds on a GRV value.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct GrvBounds {
    pub lower: f64,
    pub upper: f64,
}

impl GrvBounds {
    pub fn contains(&self, value: f64, tol: f64) -> bool {
        self.lower - tol <= value && value <= self.upper + tol
    }
}

/// A GRV value, tr(GxGy) / (‖Gx‖‖Gy‖).
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct GrvValue {
    pub value: f64,
    /// tr(GxGy).
    pub trace: f64,
    /// ‖Gx‖·‖Gy‖.
    pub norm_product: f64,
    /// Filled in by [`GrvValue::with_bounds`]; the eigendecompositions are O(N³).
    pub bounds: Option<GrvBounds>,
}

impl GrvValue {
    pub fn with_bounds(mut self, gx: &GramMatrix, gy: &GramMatrix) -> Result<Self> {
        self.bounds = Some(grv_bounds(gx, gy)?);
        Ok(self)
    }
}

fn check_pair(gx: &GramMatrix, gy: &GramMatrix) -> Result<()> {
    if gx.n() != gy.n() {
        return Err(GrvError::Dimension(format!(
            "Gram matrices differ in size: {} vs {}",
            gx.n(),
            gy.n()
        )));
    }
    if gx.is_degenerate() || gy.is_degenerate() {
        return Err(GrvError::Degenerate(
            "GRV needs both Gram matrices to have nonzero Frobenius norm (all distances zero?)"
                .into(),
        ));
    }
    Ok(())
}

/// tr(AB) for symmetric A, B as the elementwise product sum.
pub(crate) fn trace_product(a: &GramMatrix, b: &GramMatrix) -> f64 {
    a.values()
        .iter()
        .zip(b.values().iter())
        .map(|(x, y)| x * y)
        .sum()
}

pub fn grv(gx: &GramMatrix, gy: &GramMatrix) -> Result<GrvValue> {
    check_pair(gx, gy)?;
    let trace = trace_product(gx, gy);
    let norm_product = gx.frobenius_norm() * gy.frobenius_norm();
    Ok(GrvValue {
        value: trace / norm_product,
        trace,
        norm_product,
        bounds: None,
    })
}

/// Σ λx,i λy,N−i+1 ≤ tr(GxGy) ≤ Σ λx,i λy,i, divided by ‖Gx‖‖Gy‖.
pub fn grv_bounds(gx: &GramMatrix, gy: &GramMatrix) -> Result<GrvBounds> {
    check_pair(gx, gy)?;
    let lx = gx.eigenvalues()?;
    let ly = gy.eigenvalues()?;
    let norm = gx.frobenius_norm() * gy.frobenius_norm();
    let upper: f64 = lx.iter().zip(&ly).map(|(a, b)| a * b).sum();
    let lower: f64 = lx.iter().zip(ly.iter().rev()).map(|(a, b)| a * b).sum();
    Ok(GrvBounds {
        lower: lower / norm,
        upper: upper / norm,
    })
}

/// Frobenius distance between Gx/‖Gx‖ and Gy/‖Gy‖ implied by a GRV value:
/// √(2(1 − GRV)).
pub fn frobenius_from_grv(v: &GrvValue) -> Result<f64> {
    if v.value > 1.0 + 1e-9 || v.value.is_nan() {
        return Err(GrvError::Numeric(format!(
            "GRV value {} exceeds 1; inputs are inconsistent",
            v.value
        )));
    }
    Ok((2.0 * (1.0 - v.value.min(1.0))).sqrt())
}

/// Direct Frobenius distance between the norm-scaled Gram matrices.
pub fn normalized_frobenius_distance(gx: &GramMatrix, gy: &GramMatrix) -> Result<f64> {
    check_pair(gx, gy)?;
    let (sx, sy) = (gx.frobenius_norm(), gy.frobenius_norm());
    Ok(gx
        .values()
        .iter()
        .zip(gy.values().iter())
        .map(|(a, b)| {
            let d = a / sx - b / sy;
            d * d
        })
        .sum::<f64>()
        .sqrt())
}

/// True when both Grams come from metric distances, so GRV ≥ 0.
pub fn both_metric(gx: &GramMatrix, gy: &GramMatrix) -> bool {
    gx.metricity() == Metricity::Metric && gy.metricity() == Metricity::Metric
}

/// Mantel statistic: Pearson correlation of upper-triangular distances.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct MantelValue {
    pub value: f64,
    /// Number of distance pairs A = N(N−1)/2.
    pub pairs: usize,
}

/// Upper-triangular distances standardized to mean 0 and (A − 1)-denominator
/// unit variance.
pub(crate) fn standardized_upper(d: &DistanceMatrix) -> Result<Vec<f64>> {
    let v = d.upper_triangle();
    let a = v.len() as f64;
    let mean = v.iter().sum::<f64>() / a;
    let var = v.iter().map(|x| (x - mean) * (x - mean)).sum::<f64>() / (a - 1.0);
    if var <= 0.0 {
        return Err(GrvError::Degenerate(
            "Mantel needs non-constant upper-triangular distances".into(),
        ));
    }
    let sd = var.sqrt();
    Ok(v.into_iter().map(|x| (x - mean) / sd).collect())
}

pub fn mantel(dx: &DistanceMatrix, dy: &DistanceMatrix) -> Result<MantelValue> {
    if dx.n() != dy.n() {
        return Err(GrvError::Dimension(format!(
            "distance matrices differ in size: {} vs {}",
            dx.n(),
            dy.n()
        )));
    }
    if dx.n() < 3 {
        return Err(GrvError::Dimension(format!(
            "Mantel needs N >= 3, got {}",
            dx.n()
        )));
    }
    let sx = standardized_upper(dx)?;
    let sy = standardized_upper(dy)?;
    let pairs = sx.len();
    let value = sx.iter().zip(&sy).map(|(a, b)| a * b).sum::<f64>() / (pairs as f64 - 1.0);
    Ok(MantelValue { value, pairs })
}
