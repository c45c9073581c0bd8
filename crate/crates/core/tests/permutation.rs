use grv::distances::{pairwise_real, DistanceMeasure, RealMatrix};
use grv::inference::{
    grv_permutation_null, grv_pvalue_analytic, grv_pvalue_exhaustive, grv_pvalue_permutation,
    grv_pvalue_permutation_with, mantel_pvalue_exhaustive, mantel_pvalue_permutation,
    mantel_pvalue_permutation_with, Method, PermutationOptions,
};
use grv::matrices::{gower_center, DistanceMatrix, GramMatrix};
use grv::rng::stream;
use rand::Rng;

fn points(n: usize, q: usize, seed: u64) -> RealMatrix {
    let mut rng = stream(seed, 0);
    RealMatrix::from_rows(
        &(0..n)
            .map(|_| (0..q).map(|_| rng.random_range(-1.0..1.0)).collect())
            .collect::<Vec<_>>(),
    )
    .unwrap()
}

fn dist(n: usize, seed: u64) -> DistanceMatrix {
    pairwise_real(&points(n, 2, seed), DistanceMeasure::Euclidean).unwrap()
}

fn gram(n: usize, seed: u64) -> GramMatrix {
    gower_center(&dist(n, seed)).unwrap()
}

/// |p̂ − p| within `z` binomial standard errors.
fn within_binomial(estimate: f64, exact: f64, n: u64, z: f64) -> bool {
    let se = (exact * (1.0 - exact) / n as f64)
        .sqrt()
        .max(1.0 / n as f64);
    (estimate - exact).abs() <= z * se + 1.0 / n as f64
}

#[test]
fn self_association_is_significant() {
    let g = gram(30, 1);
    let r = grv_pvalue_permutation(&g, &g, 10_000, 5).unwrap();
    assert!(r.p_value <= 0.001, "{r:?}");
    let d = dist(30, 1);
    let m = mantel_pvalue_permutation(&d, &d, 10_000, 5).unwrap();
    assert!(m.p_value <= 0.001, "{m:?}");
}

#[test]
fn identity_maximizes_trace_for_equal_psd_grams() {
    for n in 3..=7 {
        let g = gram(n, n as u64);
        let ex = grv_pvalue_exhaustive(&g, &g).unwrap();
        let max = grv_permutation_null(&g, &g, 2_000, 3)
            .unwrap()
            .into_iter()
            .fold(f64::MIN, f64::max);
        assert!(max <= 1.0 + 1e-12);
        // Only automorphisms tie with the identity.
        assert!(ex.p_value * ex.n_permutations as f64 >= 1.0);
    }
}

#[test]
fn monte_carlo_agrees_with_enumeration() {
    for n in 4..=7 {
        let (gx, gy) = (gram(n, 10 + n as u64), gram(n, 20 + n as u64));
        let ex = grv_pvalue_exhaustive(&gx, &gy).unwrap();
        assert_eq!(ex.method, Method::Exhaustive);
        let mc = grv_pvalue_permutation(&gx, &gy, 100_000, 9).unwrap();
        assert!(
            within_binomial(mc.p_value, ex.p_value, 100_000, 4.0),
            "N={n}: {mc:?} vs {ex:?}"
        );

        let (dx, dy) = (dist(n, 30 + n as u64), dist(n, 40 + n as u64));
        let ex = mantel_pvalue_exhaustive(&dx, &dy).unwrap();
        let mc = mantel_pvalue_permutation(&dx, &dy, 100_000, 9).unwrap();
        assert!(
            within_binomial(mc.p_value, ex.p_value, 100_000, 4.0),
            "N={n}: {mc:?} vs {ex:?}"
        );
    }
}

#[test]
fn exhaustive_counts_every_permutation() {
    let (gx, gy) = (gram(6, 1), gram(6, 2));
    let ex = grv_pvalue_exhaustive(&gx, &gy).unwrap();
    assert_eq!(ex.n_permutations, 720);
    assert!((ex.p_value * 720.0 - (ex.p_value * 720.0).round()).abs() < 1e-9);
    assert!(grv_pvalue_exhaustive(&gram(10, 1), &gram(10, 2)).is_err());
}

#[test]
fn fixed_seed_is_reproducible_across_worker_counts() {
    let (gx, gy) = (gram(25, 3), gram(25, 4));
    let (dx, dy) = (dist(25, 3), dist(25, 4));
    let runs: Vec<_> = [1, 4, 16]
        .iter()
        .map(|&w| {
            let opts = PermutationOptions { workers: Some(w) };
            (
                grv_pvalue_permutation_with(&gx, &gy, 20_000, 77, opts).unwrap(),
                mantel_pvalue_permutation_with(&dx, &dy, 20_000, 77, opts).unwrap(),
            )
        })
        .collect();
    for r in &runs[1..] {
        assert_eq!(r.0.p_value.to_bits(), runs[0].0.p_value.to_bits());
        assert_eq!(r.1.p_value.to_bits(), runs[0].1.p_value.to_bits());
    }
}

#[test]
fn analytic_tracks_monte_carlo_on_moderate_n() {
    for seed in 0..4 {
        let gx =
            gower_center(&pairwise_real(&points(40, 5, seed), DistanceMeasure::Manhattan).unwrap())
                .unwrap();
        let gy = gower_center(
            &pairwise_real(&points(40, 3, 100 + seed), DistanceMeasure::Euclidean).unwrap(),
        )
        .unwrap();
        let a = grv_pvalue_analytic(&gx, &gy).unwrap();
        let mc = grv_pvalue_permutation(&gx, &gy, 50_000, seed).unwrap();
        assert_eq!(a.n_permutations, 0);
        assert!((a.p_value - mc.p_value).abs() < 0.015, "{a:?} vs {mc:?}");
    }
}
