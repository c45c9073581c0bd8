//! Dense CSV/TSV input and output for matrices.
//!
//! Tables have samples (or matrix rows) as rows. A header row is detected
//! automatically: it is present when any field of the first record (outside the
//! ID column) is neither a number nor a missing-value marker. A first column of sample IDs is
//! controlled by [`TableOptions::id_column`].

use std::fs::File;
use std::io::{Read, Write};
use std::path::Path;

use nalgebra::DMatrix;

use crate::distances::{GenotypeMatrix, RealMatrix};
use crate::error::{GrvError, Result};
use crate::matrices::{DistanceMatrix, Metricity};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Delimiter {
    Comma,
    Tab,
    /// Tab if the first line contains one, otherwise comma.
    Auto,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct TableOptions {
    pub delimiter: Delimiter,
    pub id_column: bool,
}

impl Default for TableOptions {
    fn default() -> Self {
        Self {
            delimiter: Delimiter::Auto,
            id_column: false,
        }
    }
}

/// A parsed text table before numeric conversion.
#[derive(Debug, Clone, PartialEq)]
pub struct Table {
    pub header: Option<Vec<String>>,
    pub ids: Option<Vec<String>>,
    pub rows: Vec<Vec<String>>,
}

/// A numeric table with optional labels.
#[derive(Debug, Clone)]
pub struct Labeled<T> {
    pub ids: Option<Vec<String>>,
    /// Column names, excluding the ID column.
    pub columns: Option<Vec<String>>,
    pub data: T,
}

/// Numbers and missing-value markers count as data when sniffing for a header.
fn looks_like_data(s: &str) -> bool {
    let s = s.trim();
    s.is_empty() || s.eq_ignore_ascii_case("na") || s.parse::<f64>().is_ok()
}

pub fn parse_table<R: Read>(mut reader: R, opts: TableOptions) -> Result<Table> {
    let mut text = String::new();
    reader.read_to_string(&mut text)?;
    let delimiter = match opts.delimiter {
        Delimiter::Comma => b',',
        Delimiter::Tab => b'\t',
        Delimiter::Auto => {
            if text.lines().next().is_some_and(|l| l.contains('\t')) {
                b'\t'
            } else {
                b','
            }
        }
    };
    let mut rdr = csv::ReaderBuilder::new()
        .delimiter(delimiter)
        .has_headers(false)
        .flexible(false)
        .trim(csv::Trim::All)
        .from_reader(text.as_bytes());
    let mut records: Vec<Vec<String>> = Vec::new();
    for rec in rdr.records() {
        let rec = rec?;
        if rec.iter().all(str::is_empty) {
            continue;
        }
        records.push(rec.iter().map(str::to_owned).collect());
    }
    if records.is_empty() {
        return Err(GrvError::Parse("empty table".into()));
    }
    let skip = usize::from(opts.id_column);
    let header = if records[0].iter().skip(skip).any(|f| !looks_like_data(f)) {
        let mut h = records.remove(0);
        h.drain(..skip.min(h.len()));
        Some(h)
    } else {
        None
    };
    let ids = opts.id_column.then(|| {
        records
            .iter_mut()
            .map(|r| {
                if r.is_empty() {
                    String::new()
                } else {
                    r.remove(0)
                }
            })
            .collect()
    });
    Ok(Table {
        header,
        ids,
        rows: records,
    })
}

pub fn read_table(path: &Path, opts: TableOptions) -> Result<Table> {
    let file = File::open(path).map_err(|e| {
        GrvError::Io(std::io::Error::new(
            e.kind(),
            format!("{}: {e}", path.display()),
        ))
    })?;
    let opts = match (opts.delimiter, path.extension().and_then(|e| e.to_str())) {
        (Delimiter::Auto, Some(ext)) if ext.eq_ignore_ascii_case("tsv") => TableOptions {
            delimiter: Delimiter::Tab,
            ..opts
        },
        _ => opts,
    };
    parse_table(file, opts)
}

fn table_to_reals(table: &Table) -> Result<DMatrix<f64>> {
    let n = table.rows.len();
    let q = table.rows[0].len();
    if q == 0 {
        return Err(GrvError::Parse("table has no data columns".into()));
    }
    let mut out = DMatrix::zeros(n, q);
    for (i, row) in table.rows.iter().enumerate() {
        for (j, field) in row.iter().enumerate() {
            out[(i, j)] = field.parse::<f64>().map_err(|_| {
                GrvError::Parse(format!(
                    "row {}, column {}: '{field}' is not a number",
                    i + 1,
                    j + 1
                ))
            })?;
        }
    }
    Ok(out)
}

fn table_to_genotypes(table: &Table) -> Result<GenotypeMatrix> {
    let n = table.rows.len();
    let p = table.rows[0].len();
    let mut values = Vec::with_capacity(n * p);
    let mut missing = 0usize;
    let mut first_bad: Option<String> = None;
    for (i, row) in table.rows.iter().enumerate() {
        for (j, field) in row.iter().enumerate() {
            match field.parse::<u8>() {
                Ok(v) if v <= 2 => values.push(v),
                _ => {
                    if field.is_empty() || field.eq_ignore_ascii_case("na") {
                        missing += 1;
                    } else if first_bad.is_none() {
                        first_bad = Some(format!("row {}, column {}: '{field}'", i + 1, j + 1));
                    }
                    values.push(0);
                }
            }
        }
    }
    if missing > 0 {
        return Err(GrvError::Validation(format!(
            "{missing} missing genotype entries; missing genotypes are not supported"
        )));
    }
    if let Some(bad) = first_bad {
        return Err(GrvError::Validation(format!(
            "genotype codes must be 0, 1 or 2 ({bad})"
        )));
    }
    GenotypeMatrix::new(n, p, values)
}

/// Samples × features real matrix.
pub fn read_real_matrix(path: &Path, opts: TableOptions) -> Result<Labeled<RealMatrix>> {
    let table = read_table(path, opts)?;
    Ok(Labeled {
        data: RealMatrix::new(table_to_reals(&table)?)?,
        ids: table.ids,
        columns: table.header,
    })
}

/// Samples × SNPs genotype matrix with codes 0/1/2.
pub fn read_genotype_matrix(path: &Path, opts: TableOptions) -> Result<Labeled<GenotypeMatrix>> {
    let table = read_table(path, opts)?;
    Ok(Labeled {
        data: table_to_genotypes(&table)?,
        ids: table.ids,
        columns: table.header,
    })
}

/// Square distance matrix; the metricity flag is supplied by the caller.
pub fn read_distance_matrix(path: &Path, metricity: Metricity) -> Result<DistanceMatrix> {
    Ok(read_labeled_distance_matrix(path, metricity, TableOptions::default())?.data)
}

/// Square distance matrix with optional row IDs.
pub fn read_labeled_distance_matrix(
    path: &Path,
    metricity: Metricity,
    opts: TableOptions,
) -> Result<Labeled<DistanceMatrix>> {
    let table = read_table(path, opts)?;
    Ok(Labeled {
        data: DistanceMatrix::new(table_to_reals(&table)?, metricity)?,
        ids: table.ids,
        columns: table.header,
    })
}

/// Write a dense matrix with full round-trip precision.
pub fn write_matrix<W: Write>(out: W, m: &DMatrix<f64>, header: Option<&[String]>) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    if let Some(h) = header {
        w.write_record(h)?;
    }
    for i in 0..m.nrows() {
        w.write_record(m.row(i).iter().map(|v| format!("{v:?}")))?;
    }
    w.flush()?;
    Ok(())
}

pub fn write_matrix_file(path: &Path, m: &DMatrix<f64>, header: Option<&[String]>) -> Result<()> {
    write_matrix(File::create(path)?, m, header)
}
