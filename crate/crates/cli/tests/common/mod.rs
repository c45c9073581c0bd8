#![allow(dead_code)]

use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use grv::distances::{GenotypeMatrix, RealMatrix};
use grv::simulation::{generate_eqtl_indexed, EqtlConfig};

pub fn grv_bin(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_grv"))
        .args(args)
        .env_remove("GRV_SEED")
        .output()
        .expect("spawn grv")
}

pub fn write_genotypes(path: &Path, g: &GenotypeMatrix, ids: Option<&[String]>) {
    let mut s = String::new();
    for i in 0..g.n() {
        if let Some(ids) = ids {
            write!(s, "{},", ids[i]).unwrap();
        }
        let row: Vec<String> = g.row(i).iter().map(u8::to_string).collect();
        writeln!(s, "{}", row.join(",")).unwrap();
    }
    fs::write(path, s).unwrap();
}

pub fn write_reals(path: &Path, r: &RealMatrix, ids: Option<&[String]>) {
    let mut s = String::new();
    for i in 0..r.n() {
        if let Some(ids) = ids {
            write!(s, "{},", ids[i]).unwrap();
        }
        let row: Vec<String> = r.row(i).iter().map(|v| format!("{v:?}")).collect();
        writeln!(s, "{}", row.join(",")).unwrap();
    }
    fs::write(path, s).unwrap();
}

/// A pathway of the synthetic cohort.
#[derive(Debug, Clone, Copy)]
pub struct PathwaySpec {
    pub snps: usize,
    pub probes: usize,
    pub associated: bool,
}

/// Concatenated genotype and expression blocks with a CSV pathway map and a
/// manifest. Pathway `i` is named `pw{i:02}`.
pub fn write_cohort(
    dir: &Path,
    n: usize,
    pathways: &[PathwaySpec],
    seed: u64,
    measures: (&[&str], &[&str]),
    extra_manifest: &str,
) -> PathBuf {
    let mut geno: Vec<Vec<u8>> = vec![Vec::new(); n];
    let mut expr: Vec<Vec<f64>> = vec![Vec::new(); n];
    let mut map = String::from("pathway_id,block,column_index\n");
    let (mut gcol, mut ecol) = (0, 0);
    for (k, spec) in pathways.iter().enumerate() {
        let cfg = EqtlConfig::new(n, spec.snps, spec.probes, spec.associated, seed);
        let data = generate_eqtl_indexed(&cfg, 0, k as u64).unwrap();
        for i in 0..n {
            geno[i].extend_from_slice(data.genotypes.row(i));
            expr[i].extend(data.expression.row(i));
        }
        for _ in 0..spec.snps {
            writeln!(map, "pw{k:02},genotype,{gcol}").unwrap();
            gcol += 1;
        }
        for _ in 0..spec.probes {
            writeln!(map, "pw{k:02},expression,{ecol}").unwrap();
            ecol += 1;
        }
    }
    write_genotypes(
        &dir.join("geno.csv"),
        &GenotypeMatrix::from_rows(&geno).unwrap(),
        None,
    );
    write_reals(
        &dir.join("expr.csv"),
        &RealMatrix::from_rows(&expr).unwrap(),
        None,
    );
    fs::write(dir.join("pathways.csv"), map).unwrap();
    let list = |ms: &[&str]| {
        ms.iter()
            .map(|m| format!("\"{m}\""))
            .collect::<Vec<_>>()
            .join(", ")
    };
    let manifest = format!(
        "genotype_file = \"geno.csv\"\nexpression_file = \"expr.csv\"\npathway_map_file = \"pathways.csv\"\n\
         gen_measures = [{}]\ngex_measures = [{}]\n{extra_manifest}",
        list(measures.0),
        list(measures.1)
    );
    let path = dir.join("scan.toml");
    fs::write(&path, manifest).unwrap();
    path
}

pub fn read_dir_bytes(dir: &Path) -> Vec<(String, Vec<u8>)> {
    let mut files: Vec<(String, Vec<u8>)> = fs::read_dir(dir)
        .unwrap()
        .map(|e| {
            let e = e.unwrap();
            (
                e.file_name().to_string_lossy().into_owned(),
                fs::read(e.path()).unwrap(),
            )
        })
        .collect();
    files.sort();
    files
}
