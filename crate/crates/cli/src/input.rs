//! Loading sample blocks from disk and aligning them.

use std::collections::HashMap;
use std::fmt;
use std::path::Path;
use std::str::FromStr;

use grv::distances::{
    pairwise_genotype, pairwise_real, DistanceMeasure, GenotypeMatrix, RealMatrix,
};
use grv::io::{read_genotype_matrix, read_labeled_distance_matrix, read_real_matrix, TableOptions};
use grv::matrices::{DistanceMatrix, Metricity};
use grv::GrvError;
use nalgebra::DMatrix;

use crate::error::{CliError, CliResult};

/// A distance measure, or a file that already holds a distance matrix.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum MeasureArg {
    Measure(DistanceMeasure),
    Precomputed,
}

impl FromStr for MeasureArg {
    type Err = GrvError;

    fn from_str(s: &str) -> Result<Self, GrvError> {
        match s.trim().to_ascii_lowercase().as_str() {
            "distance" | "precomputed" => Ok(MeasureArg::Precomputed),
            _ => s.parse().map(MeasureArg::Measure),
        }
    }
}

impl fmt::Display for MeasureArg {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            MeasureArg::Measure(m) => write!(f, "{m}"),
            MeasureArg::Precomputed => f.write_str("distance"),
        }
    }
}

#[derive(Debug, Clone)]
pub enum Block {
    Genotype(GenotypeMatrix),
    Real(RealMatrix),
    Distance(DistanceMatrix),
}

impl Block {
    pub fn n(&self) -> usize {
        match self {
            Block::Genotype(g) => g.n(),
            Block::Real(r) => r.n(),
            Block::Distance(d) => d.n(),
        }
    }

    /// Rows (and for distance matrices, columns) in the order `rows`.
    pub fn reorder(&self, rows: &[usize]) -> CliResult<Block> {
        Ok(match self {
            Block::Genotype(g) => {
                let values = rows
                    .iter()
                    .flat_map(|&i| g.row(i).iter().copied())
                    .collect();
                Block::Genotype(GenotypeMatrix::new(rows.len(), g.p(), values)?)
            }
            Block::Real(r) => {
                let v = r.values();
                Block::Real(RealMatrix::new(DMatrix::from_fn(
                    rows.len(),
                    r.q(),
                    |i, j| v[(rows[i], j)],
                ))?)
            }
            Block::Distance(d) => Block::Distance(DistanceMatrix::from_fn(
                rows.len(),
                d.metricity(),
                |i, j| d.get(rows[i], rows[j]),
            )?),
        })
    }

    pub fn distances(&self, measure: MeasureArg) -> CliResult<DistanceMatrix> {
        match (self, measure) {
            (Block::Genotype(g), MeasureArg::Measure(m)) => Ok(pairwise_genotype(g, m)?),
            (Block::Real(r), MeasureArg::Measure(m)) => Ok(pairwise_real(r, m)?),
            (Block::Distance(d), MeasureArg::Precomputed) => Ok(d.clone()),
            _ => Err(CliError::Usage(format!(
                "measure '{measure}' does not fit this input"
            ))),
        }
    }
}

/// A block with optional sample IDs.
#[derive(Debug, Clone)]
pub struct Loaded {
    pub ids: Option<Vec<String>>,
    pub block: Block,
}

/// Read `path` in the representation `measure` needs.
pub fn load(path: &Path, measure: MeasureArg, id_column: bool) -> CliResult<Loaded> {
    let opts = TableOptions {
        id_column,
        ..TableOptions::default()
    };
    Ok(match measure {
        MeasureArg::Measure(m) if m.is_genotype() => {
            let t = read_genotype_matrix(path, opts)?;
            Loaded {
                ids: t.ids,
                block: Block::Genotype(t.data),
            }
        }
        MeasureArg::Measure(_) => {
            let t = read_real_matrix(path, opts)?;
            Loaded {
                ids: t.ids,
                block: Block::Real(t.data),
            }
        }
        MeasureArg::Precomputed => {
            let t = read_labeled_distance_matrix(path, Metricity::Unknown, opts)?;
            Loaded {
                ids: t.ids,
                block: Block::Distance(t.data),
            }
        }
    })
}

/// Row indices of `other` matching each ID of `reference`.
pub fn join_rows(reference: &[String], other: &[String]) -> CliResult<Vec<usize>> {
    let mut index = HashMap::with_capacity(other.len());
    for (i, id) in other.iter().enumerate() {
        if index.insert(id.as_str(), i).is_some() {
            return Err(GrvError::Validation(format!("duplicate sample ID '{id}'")).into());
        }
    }
    if reference.len() != other.len() {
        return Err(GrvError::Dimension(format!(
            "sample counts differ: {} vs {}",
            reference.len(),
            other.len()
        ))
        .into());
    }
    reference
        .iter()
        .map(|id| {
            index.get(id.as_str()).copied().ok_or_else(|| {
                GrvError::Validation(format!("sample ID '{id}' missing from the second input"))
                    .into()
            })
        })
        .collect()
}

/// Align `y` to `x`, by ID when requested and by row order otherwise.
pub fn align(x: &Loaded, y: Loaded, join_on_id: bool) -> CliResult<Block> {
    if join_on_id {
        let (Some(xi), Some(yi)) = (&x.ids, &y.ids) else {
            return Err(CliError::Usage(
                "--join-on-id needs --id-column on both inputs".into(),
            ));
        };
        return y.block.reorder(&join_rows(xi, yi)?);
    }
    if x.block.n() != y.block.n() {
        return Err(GrvError::Dimension(format!(
            "sample counts differ: x has {} rows, y has {}",
            x.block.n(),
            y.block.n()
        ))
        .into());
    }
    Ok(y.block)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn join_reorders_and_rejects_unknown_ids() {
        let a: Vec<String> = ["s1", "s2", "s3"].map(String::from).to_vec();
        let b: Vec<String> = ["s3", "s1", "s2"].map(String::from).to_vec();
        assert_eq!(join_rows(&a, &b).unwrap(), vec![1, 2, 0]);
        let c: Vec<String> = ["s3", "s1", "s4"].map(String::from).to_vec();
        assert!(join_rows(&a, &c).is_err());
    }

    #[test]
    fn measure_arg_parses_precomputed() {
        assert_eq!(
            "distance".parse::<MeasureArg>().unwrap(),
            MeasureArg::Precomputed
        );
        assert_eq!(
            "IBS".parse::<MeasureArg>().unwrap(),
            MeasureArg::Measure(DistanceMeasure::Ibs)
        );
        assert!("nope".parse::<MeasureArg>().is_err());
    }
}
