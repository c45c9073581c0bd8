mod common;

use std::fs;

use common::{grv_bin, read_dir_bytes, write_cohort, write_genotypes, write_reals, PathwaySpec};
use grv::distances::RealMatrix;
use grv::simulation::{generate_eqtl_indexed, EqtlConfig};
use grv_cli::scan::{run_scan, ScanArgs, ScanMethod};
use grv_cli::test_cmd::{run_test, MethodArg, Statistic, TestArgs};
use rand::Rng;
use serde_json::Value;

fn json(out: &[u8]) -> Value {
    serde_json::from_slice(out).expect("json on stdout")
}

fn real_block(n: usize, q: usize, seed: u64) -> RealMatrix {
    let mut rng = grv::rng::stream(seed, 0);
    let rows: Vec<Vec<f64>> = (0..n)
        .map(|_| (0..q).map(|_| rng.random_range(-1.0..1.0)).collect())
        .collect();
    RealMatrix::from_rows(&rows).unwrap()
}

#[test]
fn self_association_is_perfect() {
    let dir = tempfile::tempdir().unwrap();
    let x = real_block(30, 4, 1);
    write_reals(&dir.path().join("x.csv"), &x, None);
    let p = dir.path().join("x.csv");
    let p = p.to_str().unwrap();
    let out = grv_bin(&["test", "--x", p, "--y", p]);
    assert!(
        out.status.success(),
        "{}",
        String::from_utf8_lossy(&out.stderr)
    );
    let v = json(&out.stdout);
    assert!((v["statistic"].as_f64().unwrap() - 1.0).abs() < 1e-12);
    assert!(v["p_value"].as_f64().unwrap() < 1e-6);
    assert_eq!(v["method"], "analytic");
    assert_eq!(v["n_permutations"], 0);
    assert_eq!(v["n"], 30);
}

#[test]
fn mismatched_sample_counts_exit_with_validation_code() {
    let dir = tempfile::tempdir().unwrap();
    write_reals(&dir.path().join("x.csv"), &real_block(12, 3, 1), None);
    write_reals(&dir.path().join("y.csv"), &real_block(10, 3, 2), None);
    let out = grv_bin(&[
        "test",
        "--x",
        dir.path().join("x.csv").to_str().unwrap(),
        "--y",
        dir.path().join("y.csv").to_str().unwrap(),
    ]);
    assert_eq!(out.status.code(), Some(2));
    let err = String::from_utf8_lossy(&out.stderr);
    assert!(err.contains("12") && err.contains("10"), "{err}");
}

#[test]
fn error_classes_map_to_exit_codes() {
    let dir = tempfile::tempdir().unwrap();
    let x = dir.path().join("x.csv");
    write_reals(&x, &real_block(8, 2, 3), None);
    let constant = dir.path().join("c.csv");
    fs::write(&constant, "1,1\n1,1\n1,1\n1,1\n1,1\n1,1\n1,1\n1,1\n").unwrap();
    let x = x.to_str().unwrap();

    let unknown = grv_bin(&["test", "--x", x, "--y", x, "--y-measure", "nope"]);
    assert_eq!(unknown.status.code(), Some(2));

    let degenerate = grv_bin(&["test", "--x", x, "--y", constant.to_str().unwrap()]);
    assert_eq!(
        degenerate.status.code(),
        Some(3),
        "{}",
        String::from_utf8_lossy(&degenerate.stderr)
    );

    let missing = grv_bin(&["test", "--x", x, "--y", "/nonexistent/y.csv"]);
    assert_eq!(missing.status.code(), Some(4));

    let mantel_analytic = grv_bin(&["test", "--x", x, "--y", x, "--statistic", "mantel"]);
    assert_eq!(mantel_analytic.status.code(), Some(2));

    let exhaustive = grv_bin(&["test", "--x", x, "--y", x, "--method", "exhaustive"]);
    assert_eq!(exhaustive.status.code(), Some(0));
}

#[test]
fn join_on_id_matches_pre_aligned_rows() {
    let dir = tempfile::tempdir().unwrap();
    let data = generate_eqtl_indexed(&EqtlConfig::new(20, 3, 4, true, 5), 0, 0).unwrap();
    let ids: Vec<String> = (0..20).map(|i| format!("s{i}")).collect();
    write_genotypes(&dir.path().join("g.csv"), &data.genotypes, Some(&ids));
    write_reals(&dir.path().join("e.csv"), &data.expression, Some(&ids));
    // Same expression rows, written in reverse order.
    let rev: Vec<usize> = (0..20).rev().collect();
    let shuffled = RealMatrix::from_rows(
        &rev.iter()
            .map(|&i| data.expression.row(i))
            .collect::<Vec<_>>(),
    )
    .unwrap();
    let rev_ids: Vec<String> = rev.iter().map(|&i| ids[i].clone()).collect();
    write_reals(&dir.path().join("e_rev.csv"), &shuffled, Some(&rev_ids));

    let args = |y: &str, join: bool| TestArgs {
        x: dir.path().join("g.csv"),
        y: dir.path().join(y),
        x_measure: "ibs".parse().unwrap(),
        y_measure: "euclidean".parse().unwrap(),
        statistic: Statistic::Grv,
        method: MethodArg::Analytic,
        n_perm: 100,
        seed: Some(1),
        workers: None,
        id_column: true,
        join_on_id: join,
    };
    let aligned = run_test(&args("e.csv", false)).unwrap().result;
    let joined = run_test(&args("e_rev.csv", true)).unwrap().result;
    let unjoined = run_test(&args("e_rev.csv", false)).unwrap().result;
    assert!((aligned.statistic - joined.statistic).abs() < 1e-12);
    assert!((aligned.p_value - joined.p_value).abs() < 1e-9);
    assert!((aligned.statistic - unjoined.statistic).abs() > 1e-6);
}

#[test]
fn precomputed_distance_input() {
    let dir = tempfile::tempdir().unwrap();
    let x = real_block(9, 3, 11);
    let d = grv::distances::pairwise_real(&x, grv::distances::DistanceMeasure::Manhattan).unwrap();
    grv::io::write_matrix_file(&dir.path().join("d.csv"), d.values(), None).unwrap();
    write_reals(&dir.path().join("x.csv"), &x, None);
    let out = grv_bin(&[
        "test",
        "--x",
        dir.path().join("d.csv").to_str().unwrap(),
        "--x-measure",
        "distance",
        "--y",
        dir.path().join("x.csv").to_str().unwrap(),
        "--y-measure",
        "manhattan",
        "--statistic",
        "mantel",
        "--method",
        "exhaustive",
    ]);
    assert!(
        out.status.success(),
        "{}",
        String::from_utf8_lossy(&out.stderr)
    );
    let v = json(&out.stdout);
    assert!((v["statistic"].as_f64().unwrap() - 1.0).abs() < 1e-12);
    assert_eq!(v["n_permutations"], 362_880);
}

#[test]
fn null_pvalues_are_roughly_uniform() {
    let dir = tempfile::tempdir().unwrap();
    let mut ps = Vec::new();
    for k in 0..200 {
        let data = generate_eqtl_indexed(&EqtlConfig::new(40, 4, 6, false, 77), 0, k).unwrap();
        write_genotypes(&dir.path().join("g.csv"), &data.genotypes, None);
        write_reals(&dir.path().join("e.csv"), &data.expression, None);
        let r = run_test(&TestArgs {
            x: dir.path().join("g.csv"),
            y: dir.path().join("e.csv"),
            x_measure: "ibs".parse().unwrap(),
            y_measure: "euclidean".parse().unwrap(),
            statistic: Statistic::Grv,
            method: MethodArg::Analytic,
            n_perm: 1,
            seed: None,
            workers: None,
            id_column: false,
            join_on_id: false,
        })
        .unwrap();
        ps.push(r.result.p_value);
    }
    ps.sort_by(f64::total_cmp);
    // Kolmogorov-Smirnov distance to U(0,1); the 0.1% critical value at n = 200 is about 0.138.
    let n = ps.len() as f64;
    let ks = ps
        .iter()
        .enumerate()
        .map(|(i, &p)| (p - i as f64 / n).abs().max(((i + 1) as f64 / n - p).abs()))
        .fold(0.0, f64::max);
    assert!(ks < 0.138, "KS distance {ks}");
}

fn small_cohort(dir: &std::path::Path, extra: &str) -> std::path::PathBuf {
    let specs = [
        PathwaySpec {
            snps: 2,
            probes: 6,
            associated: true,
        },
        PathwaySpec {
            snps: 3,
            probes: 5,
            associated: false,
        },
        PathwaySpec {
            snps: 5,
            probes: 7,
            associated: false,
        },
        PathwaySpec {
            snps: 2,
            probes: 3,
            associated: false,
        },
    ];
    write_cohort(
        dir,
        60,
        &specs,
        9,
        (&["ibs", "ss"], &["euclidean", "mahalanobis"]),
        extra,
    )
}

fn scan_args(manifest: &std::path::Path, out: &std::path::Path) -> ScanArgs {
    ScanArgs {
        manifest: manifest.to_path_buf(),
        out: out.to_path_buf(),
        ..ScanArgs::default()
    }
}

#[test]
fn scan_counts_skips_and_ranks() {
    let dir = tempfile::tempdir().unwrap();
    let manifest = small_cohort(dir.path(), "seed = 3\n");
    let report = run_scan(&scan_args(&manifest, &dir.path().join("out"))).unwrap();
    // Pathway pw03 has 3 expression features, below the default minimum of 5.
    assert_eq!(report.results.len(), 3 * 2 * 2);
    assert_eq!(report.pathways.len(), 3);
    assert_eq!(report.skipped.len(), 1);
    assert_eq!(report.skipped[0].pathway, "pw03");
    assert_eq!(report.totals.permutations, 0);
    assert_eq!(report.pathways[0].pathway, "pw00");
    assert_eq!(report.pathways[0].rank, Some(1));
    for s in &report.pathways {
        let ps: Vec<f64> = report
            .results
            .iter()
            .filter(|r| r.pathway == s.pathway)
            .map(|r| r.p_value.unwrap())
            .collect();
        let max = ps.iter().copied().fold(0.0, f64::max);
        assert!((s.combined_p.unwrap() - max.powi(4)).abs() < 1e-15);
    }
}

#[test]
fn scan_reports_are_byte_identical_across_runs_and_workers() {
    let dir = tempfile::tempdir().unwrap();
    let manifest = small_cohort(
        dir.path(),
        "method = \"monte_carlo\"\nn_perm = 499\nseed = 21\n",
    );
    let mut outputs = Vec::new();
    for (i, workers) in [Some(1), Some(4), Some(4), None].into_iter().enumerate() {
        let out = dir.path().join(format!("out{i}"));
        let args = ScanArgs {
            workers,
            ..scan_args(&manifest, &out)
        };
        let report = run_scan(&args).unwrap();
        assert_eq!(report.config.method, ScanMethod::MonteCarlo);
        assert_eq!(report.totals.permutations, 12 * 499);
        grv_cli::scan::write_report(&report, &out).unwrap();
        outputs.push(read_dir_bytes(&out));
    }
    assert_eq!(outputs[0].len(), 4);
    assert!(outputs.windows(2).all(|w| w[0] == w[1]));
}

#[test]
fn scan_marks_failed_combinations_and_continues() {
    let dir = tempfile::tempdir().unwrap();
    let manifest = small_cohort(dir.path(), "seed = 3\n");
    // Overwrite pw01's expression columns (5..10) with a constant.
    let expr_path = dir.path().join("expr.csv");
    let text = fs::read_to_string(&expr_path).unwrap();
    let patched: String = text
        .lines()
        .map(|l| {
            let mut f: Vec<&str> = l.split(',').collect();
            for c in f.iter_mut().take(11).skip(6) {
                *c = "2.5";
            }
            f.join(",") + "\n"
        })
        .collect();
    fs::write(&expr_path, patched).unwrap();
    let report = run_scan(&scan_args(&manifest, &dir.path().join("out"))).unwrap();
    let failed: Vec<_> = report
        .results
        .iter()
        .filter(|r| r.error.is_some())
        .collect();
    assert_eq!(failed.len(), 4);
    assert!(failed.iter().all(|r| r.pathway == "pw01"));
    assert_eq!(report.totals.failed_tests, 4);
    let pw01 = report
        .pathways
        .iter()
        .find(|s| s.pathway == "pw01")
        .unwrap();
    assert_eq!(pw01.combined_p, None);
    assert_eq!(pw01.rank, None);
    assert_eq!(report.pathways.last().unwrap().pathway, "pw01");
}

#[test]
fn scan_rejects_out_of_range_columns() {
    let dir = tempfile::tempdir().unwrap();
    let manifest = small_cohort(dir.path(), "");
    fs::write(
        dir.path().join("pathways.csv"),
        "pathway_id,block,column_index\nA,genotype,0\nA,expression,999\n",
    )
    .unwrap();
    let out = grv_bin(&[
        "scan",
        manifest.to_str().unwrap(),
        "--out",
        dir.path().join("o").to_str().unwrap(),
    ]);
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("999"));
}

#[test]
fn scan_accepts_json_pathway_map_and_flag_overrides() {
    let dir = tempfile::tempdir().unwrap();
    let manifest = small_cohort(dir.path(), "seed = 3\n");
    let text = fs::read_to_string(&manifest)
        .unwrap()
        .replace("pathways.csv", "pathways.json");
    fs::write(&manifest, text).unwrap();
    fs::write(
        dir.path().join("pathways.json"),
        r#"[{"id": "first", "genotype": [0, 1], "expression": [0, 1, 2, 3, 4, 5]},
            {"id": "tiny", "genotype": [4], "expression": [6, 7, 8]}]"#,
    )
    .unwrap();
    let args = ScanArgs {
        min_features: Some(3),
        ..scan_args(&manifest, &dir.path().join("o"))
    };
    let report = run_scan(&args).unwrap();
    assert_eq!(report.config.min_features, 3);
    assert_eq!(report.pathways.len(), 2);
    assert!(report.skipped.is_empty());
}

#[test]
fn simulate_single_run_flags_undefined_sd() {
    let out = grv_bin(&[
        "simulate",
        "--runs",
        "1",
        "--datasets",
        "1",
        "--n",
        "20",
        "--seed",
        "4",
    ]);
    assert!(
        out.status.success(),
        "{}",
        String::from_utf8_lossy(&out.stderr)
    );
    let text = String::from_utf8(out.stdout).unwrap();
    let mut lines = text.lines();
    assert!(lines.next().unwrap().starts_with("mode,n,gen_measure"));
    let row: Vec<&str> = lines.next().unwrap().split(',').collect();
    assert_eq!(row[7], "0.0");
    assert_eq!(row[8], "false");
    assert!(row[12].ends_with("(n/a)"));
}

#[test]
fn simulate_size_mode_emits_one_row_per_level() {
    let out = grv_bin(&[
        "simulate",
        "--mode",
        "size",
        "--runs",
        "2",
        "--datasets",
        "5",
        "--n",
        "20,30",
        "--gex-measures",
        "euclidean,mahalanobis",
        "--seed",
        "4",
    ]);
    assert!(
        out.status.success(),
        "{}",
        String::from_utf8_lossy(&out.stderr)
    );
    assert_eq!(
        String::from_utf8(out.stdout).unwrap().lines().count(),
        1 + 2 * 2 * 3
    );
}

#[test]
fn simulate_rejects_bad_flags() {
    let out = grv_bin(&["simulate", "--runs", "0"]);
    assert_eq!(out.status.code(), Some(2));
    let out = grv_bin(&["simulate", "--gen-measures", "euclidean"]);
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn meta_identical_lists_and_bad_k() {
    let dir = tempfile::tempdir().unwrap();
    let ids: String = (0..30).map(|i| format!("u{i}\n")).collect();
    fs::write(dir.path().join("a.txt"), &ids).unwrap();
    let a = dir.path().join("a.txt");
    let a = a.to_str().unwrap();
    let plot = dir.path().join("plot.csv");
    let out = grv_bin(&[
        "meta",
        "--a",
        a,
        "--b",
        a,
        "--k",
        "2,5,10,30",
        "--n-perm",
        "999",
        "--seed",
        "1",
        "--plot-csv",
        plot.to_str().unwrap(),
    ]);
    assert!(
        out.status.success(),
        "{}",
        String::from_utf8_lossy(&out.stderr)
    );
    let v = json(&out.stdout);
    for p in v["points"].as_array().unwrap() {
        assert_eq!(p["distance"], 0.0);
        assert!(p["q_value"].as_f64().unwrap() <= 0.005);
    }
    assert_eq!(fs::read_to_string(&plot).unwrap().lines().count(), 5);

    let out = grv_bin(&["meta", "--a", a, "--b", a, "--k", "31"]);
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn meta_reads_scan_reports_and_pvalue_tables() {
    let dir = tempfile::tempdir().unwrap();
    let manifest = small_cohort(dir.path(), "seed = 3\n");
    let out = dir.path().join("out");
    let status = grv_bin(&[
        "scan",
        manifest.to_str().unwrap(),
        "--out",
        out.to_str().unwrap(),
    ]);
    assert!(
        status.status.success(),
        "{}",
        String::from_utf8_lossy(&status.stderr)
    );
    fs::write(
        dir.path().join("p.csv"),
        "id,c1,c2\npw00,0.01,0.02\npw01,0.5,0.3\npw02,0.2,0.9\nextra,0.1,0.1\n",
    )
    .unwrap();
    let res = grv_bin(&[
        "meta",
        "--a",
        out.join("results.json").to_str().unwrap(),
        "--b",
        dir.path().join("p.csv").to_str().unwrap(),
        "--intersect",
        "--n-perm",
        "99",
    ]);
    assert!(
        res.status.success(),
        "{}",
        String::from_utf8_lossy(&res.stderr)
    );
    let v = json(&res.stdout);
    assert_eq!(v["n_items"], 3);
    assert_eq!(v["points"].as_array().unwrap().len(), 3);

    let mismatch = grv_bin(&[
        "meta",
        "--a",
        out.join("results.json").to_str().unwrap(),
        "--b",
        dir.path().join("p.csv").to_str().unwrap(),
    ]);
    assert_eq!(mismatch.status.code(), Some(2));
}
