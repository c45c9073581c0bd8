//! Association testing between paired distance matrices.
//!
//! The generalized RV (GRV) statistic compares two Gower-centered inner-product
//! matrices built from arbitrary (metric or semi-metric) distance matrices. Its
//! permutation null is approximated in closed form from the exact first three
//! permutation moments and a Pearson type III distribution, so a p-value needs no
//! Monte Carlo permutations. Permutation and exhaustive oracles, the Mantel
//! baseline, a synthetic eQTL power harness, and ranked-list meta-analysis tools
//! are provided alongside.
//!
//! ```
//! use grv::distances::{pairwise_real, DistanceMeasure, RealMatrix};
//! use grv::inference::grv_pvalue_analytic;
//! use grv::matrices::gower_center;
//!
//! let x = RealMatrix::from_rows(&[
//!     vec![0.0, 1.0], vec![1.0, 0.5], vec![2.0, 2.5],
//!     vec![3.0, 2.0], vec![4.0, 4.5], vec![5.0, 4.0],
//! ]).unwrap();
//! let dx = pairwise_real(&x, DistanceMeasure::Euclidean).unwrap();
//! let gx = gower_center(&dx).unwrap();
//! let result = grv_pvalue_analytic(&gx, &gx).unwrap();
//! assert!((result.statistic - 1.0).abs() < 1e-12);
//! ```

pub mod association;
pub mod distances;
pub mod error;
pub mod inference;
pub mod io;
pub mod matrices;
pub mod meta;
pub mod rng;
pub mod simulation;

pub use error::{GrvError, Result};

#[cfg(feature = "parallel")]
pub(crate) fn par_map<T, F>(n: usize, f: F) -> Vec<T>
where
    T: Send,
    F: Fn(usize) -> T + Sync + Send,
{
    use rayon::prelude::*;
    (0..n).into_par_iter().map(f).collect()
}

#[cfg(not(feature = "parallel"))]
pub(crate) fn par_map<T, F>(n: usize, f: F) -> Vec<T>
where
    F: Fn(usize) -> T,
{
    (0..n).map(f).collect()
}
