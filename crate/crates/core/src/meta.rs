//! Combining p-values across distance pairs and comparing ranked lists.

use std::collections::{HashMap, HashSet};
use std::io::Read;
use std::path::Path;

use rand::seq::SliceRandom;
use serde::{Deserialize, Serialize};

use crate::error::{GrvError, Result};
use crate::io::{parse_table, TableOptions};
use crate::rng::stream;

/// maxP combination: (max pᵢ)^k, the law of the largest of k independent uniforms.
pub fn combine_maxp(pvalues: &[f64]) -> Result<f64> {
    if pvalues.is_empty() {
        return Err(GrvError::Validation(
            "maxP needs at least one p-value".into(),
        ));
    }
    let mut max = 0.0_f64;
    for &p in pvalues {
        if !(0.0..=1.0).contains(&p) {
            return Err(GrvError::Validation(format!(
                "p-value {p} is outside [0, 1]"
            )));
        }
        max = max.max(p);
    }
    Ok(max.powi(pvalues.len() as i32))
}

/// Units × measure-pairs table of p-values.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PValueMatrix {
    pub units: Vec<String>,
    pub columns: Vec<String>,
    /// Row-major, one row per unit.
    pub values: Vec<Vec<f64>>,
}

impl PValueMatrix {
    pub fn new(units: Vec<String>, columns: Vec<String>, values: Vec<Vec<f64>>) -> Result<Self> {
        if columns.is_empty() {
            return Err(GrvError::Validation(
                "p-value matrix needs at least one column".into(),
            ));
        }
        if units.len() != values.len() {
            return Err(GrvError::Dimension(format!(
                "{} unit IDs for {} rows",
                units.len(),
                values.len()
            )));
        }
        for (u, row) in units.iter().zip(&values) {
            if row.len() != columns.len() {
                return Err(GrvError::Dimension(format!(
                    "unit {u} has {} p-values, expected {}",
                    row.len(),
                    columns.len()
                )));
            }
            if let Some(p) = row.iter().find(|p| !(0.0..=1.0).contains(*p)) {
                return Err(GrvError::Validation(format!(
                    "unit {u}: p-value {p} is outside [0, 1]"
                )));
            }
        }
        Ok(Self {
            units,
            columns,
            values,
        })
    }

    /// CSV with unit IDs in the first column and a header row.
    pub fn from_reader<R: Read>(reader: R) -> Result<Self> {
        let t = parse_table(
            reader,
            TableOptions {
                id_column: true,
                ..Default::default()
            },
        )?;
        let columns = t
            .header
            .unwrap_or_else(|| (1..=t.rows[0].len()).map(|i| format!("p{i}")).collect());
        let values = t
            .rows
            .iter()
            .map(|r| {
                r.iter()
                    .map(|f| {
                        f.parse::<f64>()
                            .map_err(|_| GrvError::Parse(format!("'{f}' is not a p-value")))
                    })
                    .collect()
            })
            .collect::<Result<_>>()?;
        Self::new(t.ids.unwrap_or_default(), columns, values)
    }

    pub fn combined(&self) -> Vec<f64> {
        self.values
            .iter()
            .map(|row| combine_maxp(row).expect("validated on construction"))
            .collect()
    }

    /// Units ranked by combined maxP p-value.
    pub fn ranked(&self) -> RankedList {
        RankedList::from_scores(&self.units, &self.combined()).expect("validated on construction")
    }
}

/// IDs ordered from most to least significant.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct RankedList {
    ids: Vec<String>,
}

impl RankedList {
    pub fn new(ids: Vec<String>) -> Result<Self> {
        let mut seen = HashSet::new();
        if let Some(dup) = ids.iter().find(|id| !seen.insert(id.as_str())) {
            return Err(GrvError::Validation(format!(
                "duplicate ID '{dup}' in ranked list"
            )));
        }
        if ids.is_empty() {
            return Err(GrvError::Validation("ranked list is empty".into()));
        }
        Ok(Self { ids })
    }

    /// Ascending by score; equal scores ordered by ID.
    pub fn from_scores(ids: &[String], scores: &[f64]) -> Result<Self> {
        if ids.len() != scores.len() {
            return Err(GrvError::Dimension(format!(
                "{} IDs for {} scores",
                ids.len(),
                scores.len()
            )));
        }
        let mut order: Vec<usize> = (0..ids.len()).collect();
        order.sort_by(|&a, &b| {
            scores[a]
                .total_cmp(&scores[b])
                .then_with(|| ids[a].cmp(&ids[b]))
        });
        Self::new(order.into_iter().map(|i| ids[i].clone()).collect())
    }

    /// One ID per line; blank lines ignored.
    pub fn from_reader<R: Read>(mut reader: R) -> Result<Self> {
        let mut text = String::new();
        reader.read_to_string(&mut text)?;
        Self::new(
            text.lines()
                .map(str::trim)
                .filter(|l| !l.is_empty())
                .map(str::to_owned)
                .collect(),
        )
    }

    pub fn from_path(path: &Path) -> Result<Self> {
        Self::from_reader(std::fs::File::open(path)?)
    }

    /// The IDs shared with `other`, in this list's order.
    pub fn intersect(&self, other: &RankedList) -> Result<Self> {
        let keep: HashSet<&str> = other.ids.iter().map(String::as_str).collect();
        Self::new(
            self.ids
                .iter()
                .filter(|id| keep.contains(id.as_str()))
                .cloned()
                .collect(),
        )
    }

    pub fn ids(&self) -> &[String] {
        &self.ids
    }

    pub fn len(&self) -> usize {
        self.ids.len()
    }

    pub fn is_empty(&self) -> bool {
        self.ids.is_empty()
    }

    pub fn reversed(&self) -> Self {
        Self {
            ids: self.ids.iter().rev().cloned().collect(),
        }
    }

    /// For each position of `self`, the 1-based rank of that ID in `other`.
    fn ranks_in(&self, other: &RankedList) -> Result<Vec<usize>> {
        if self.len() != other.len() {
            return Err(GrvError::Validation(format!(
                "ranked lists differ in size: {} vs {}",
                self.len(),
                other.len()
            )));
        }
        let pos: HashMap<&str, usize> = other
            .ids
            .iter()
            .enumerate()
            .map(|(i, id)| (id.as_str(), i + 1))
            .collect();
        self.ids
            .iter()
            .map(|id| {
                pos.get(id.as_str()).copied().ok_or_else(|| {
                    GrvError::Validation(format!("ID '{id}' missing from the second list"))
                })
            })
            .collect()
    }
}

fn check_k(k: usize, p: usize) -> Result<()> {
    if k == 0 || k > p {
        return Err(GrvError::Validation(format!(
            "k must be in 1..={p}, got {k}"
        )));
    }
    Ok(())
}

/// Expected top-k Canberra distance between a fixed ranking of `p` items and a
/// uniformly random one.
///
/// Ranks beyond k are truncated to k + 1, so rank k + 1 carries weight p − k.
pub fn canberra_expected(p: usize, k: usize) -> f64 {
    let weight = |a: usize| if a <= k { 1.0 } else { (p - k) as f64 };
    let top = k + 1;
    let mut total = 0.0;
    for a in 1..=top {
        for b in (a + 1)..=top {
            total += 2.0 * weight(a) * weight(b) * (b - a) as f64 / (a + b) as f64;
        }
    }
    total / p as f64
}

/// Raw distance over its expectation; a single-item universe has nothing to compare.
fn normalized(raw: f64, expected: f64) -> f64 {
    if expected > 0.0 {
        raw / expected
    } else {
        0.0
    }
}

fn raw_canberra(ranks_a: impl Iterator<Item = usize>, ranks_b: &[usize], k: usize) -> f64 {
    let cap = k + 1;
    ranks_a
        .zip(ranks_b)
        .map(|(a, &b)| {
            let (a, b) = (a.min(cap) as f64, b.min(cap) as f64);
            (a - b).abs() / (a + b)
        })
        .sum()
}

/// Top-k Canberra distance between two rankings of the same IDs, divided by its
/// expectation under a random ranking. 0 means identical top-k; ≈ 1 is chance level.
pub fn canberra_topk(a: &RankedList, b: &RankedList, k: usize) -> Result<f64> {
    let ranks_b = a.ranks_in(b)?;
    check_k(k, a.len())?;
    Ok(normalized(
        raw_canberra(1..=a.len(), &ranks_b, k),
        canberra_expected(a.len(), k),
    ))
}

/// Normalized distances from `list` to `n_perm` random rankings, for every k in `ks`.
/// Row i holds permutation i.
fn permuted_distances(p: usize, ks: &[usize], n_perm: u64, seed: u64) -> Vec<Vec<f64>> {
    let expected: Vec<f64> = ks.iter().map(|&k| canberra_expected(p, k)).collect();
    crate::par_map(n_perm as usize, |i| {
        let mut ranks: Vec<usize> = (1..=p).collect();
        ranks.shuffle(&mut stream(seed, i as u64));
        ks.iter()
            .zip(&expected)
            .map(|(&k, &e)| normalized(raw_canberra(1..=p, &ranks, k), e))
            .collect()
    })
}

/// Mean normalized distance between `list` and random rankings at each k.
pub fn random_baseline(
    list: &RankedList,
    ks: &[usize],
    n_perm: u64,
    seed: u64,
) -> Result<Vec<f64>> {
    ks.iter().try_for_each(|&k| check_k(k, list.len()))?;
    if n_perm == 0 {
        return Err(GrvError::Validation("n_perm must be at least 1".into()));
    }
    let rows = permuted_distances(list.len(), ks, n_perm, seed);
    Ok((0..ks.len())
        .map(|j| rows.iter().map(|r| r[j]).sum::<f64>() / n_perm as f64)
        .collect())
}

/// One k of a ranked-list comparison.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SweepPoint {
    pub k: usize,
    pub distance: f64,
    /// Mean normalized distance over the random rankings.
    pub baseline: f64,
    pub p_value: f64,
    /// Benjamini-Hochberg adjustment across the sweep.
    pub q_value: f64,
}

/// Tolerance for counting a permuted distance as tied with the observed one.
const DISTANCE_TIE: f64 = 1e-12;

/// Left-tailed permutation p-values of the top-k distance at each k, with the
/// add-one rule, plus baselines and BH q-values across the sweep.
pub fn canberra_sweep(
    a: &RankedList,
    b: &RankedList,
    ks: &[usize],
    n_perm: u64,
    seed: u64,
) -> Result<Vec<SweepPoint>> {
    let ranks_b = a.ranks_in(b)?;
    ks.iter().try_for_each(|&k| check_k(k, a.len()))?;
    if n_perm == 0 {
        return Err(GrvError::Validation("n_perm must be at least 1".into()));
    }
    let p = a.len();
    let observed: Vec<f64> = ks
        .iter()
        .map(|&k| normalized(raw_canberra(1..=p, &ranks_b, k), canberra_expected(p, k)))
        .collect();
    let rows = permuted_distances(p, ks, n_perm, seed);
    let mut points: Vec<SweepPoint> = ks
        .iter()
        .enumerate()
        .map(|(j, &k)| {
            let hits = rows
                .iter()
                .filter(|r| r[j] <= observed[j] + DISTANCE_TIE)
                .count();
            SweepPoint {
                k,
                distance: observed[j],
                baseline: rows.iter().map(|r| r[j]).sum::<f64>() / n_perm as f64,
                p_value: (1 + hits) as f64 / (n_perm + 1) as f64,
                q_value: f64::NAN,
            }
        })
        .collect();
    let q = benjamini_hochberg(&points.iter().map(|s| s.p_value).collect::<Vec<_>>());
    for (s, q) in points.iter_mut().zip(q) {
        s.q_value = q;
    }
    Ok(points)
}

/// Left-tailed rank-overlap p-value at a single k.
pub fn rank_overlap_pvalue(
    a: &RankedList,
    b: &RankedList,
    k: usize,
    n_perm: u64,
    seed: u64,
) -> Result<f64> {
    Ok(canberra_sweep(a, b, &[k], n_perm, seed)?[0].p_value)
}

/// Step-up Benjamini-Hochberg adjusted p-values, in input order.
pub fn benjamini_hochberg(pvalues: &[f64]) -> Vec<f64> {
    let m = pvalues.len();
    let mut order: Vec<usize> = (0..m).collect();
    order.sort_by(|&a, &b| pvalues[a].total_cmp(&pvalues[b]));
    let mut q = vec![0.0; m];
    let mut running = 1.0_f64;
    for (rank, &i) in order.iter().enumerate().rev() {
        running = running.min(pvalues[i] * m as f64 / (rank + 1) as f64);
        q[i] = running;
    }
    q
}
