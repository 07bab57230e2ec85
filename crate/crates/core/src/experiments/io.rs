use std::io::Write;
use std::path::Path;

use crate::data::Dataset;
use crate::error::{Error, Result};
use crate::linalg::DenseMatrix;

fn format_error(path: &Path, message: impl Into<String>) -> Error {
    Error::FileFormat {
        path: path.to_owned(),
        message: message.into(),
    }
}

fn reader(path: &Path) -> Result<csv::Reader<std::fs::File>> {
    let file = std::fs::File::open(path).map_err(|e| format_error(path, e.to_string()))?;
    Ok(csv::ReaderBuilder::new()
        .has_headers(false)
        .trim(csv::Trim::All)
        .from_reader(file))
}

fn parse_field(path: &Path, line: usize, col: usize, s: &str) -> Result<f64> {
    let v: f64 = s
        .parse()
        .map_err(|_| format_error(path, format!("line {line}, column {}: not a number: {s:?}", col + 1)))?;
    if !v.is_finite() {
        return Err(format_error(path, format!("line {line}, column {}: non-finite value", col + 1)));
    }
    Ok(v)
}

/// Reads a headerless numeric CSV, one sample per row.
pub fn read_samples_csv(path: &Path) -> Result<Dataset> {
    let (data, _) = read_rows(path, false)?;
    Ok(data)
}

/// Reads an embedding file; with `with_class` the final column is an
/// integer class label returned separately.
pub fn read_embeddings(path: &Path, with_class: bool) -> Result<(Dataset, Option<Vec<i64>>)> {
    read_rows(path, with_class)
}

fn read_rows(path: &Path, with_class: bool) -> Result<(Dataset, Option<Vec<i64>>)> {
    let mut rdr = reader(path)?;
    let mut values = Vec::new();
    let mut classes = Vec::new();
    let mut cols: Option<usize> = None;
    let mut n = 0;
    for (i, rec) in rdr.records().enumerate() {
        let rec = rec.map_err(|e| format_error(path, e.to_string()))?;
        let line = i + 1;
        let width = rec.len();
        let feat = if with_class { width.saturating_sub(1) } else { width };
        if feat == 0 {
            return Err(format_error(path, format!("line {line}: no feature columns")));
        }
        match cols {
            None => cols = Some(feat),
            Some(c) if c != feat => {
                return Err(format_error(
                    path,
                    format!("line {line}: expected {c} feature columns, found {feat}"),
                ))
            }
            _ => {}
        }
        for (j, field) in rec.iter().take(feat).enumerate() {
            values.push(parse_field(path, line, j, field)?);
        }
        if with_class {
            let s = &rec[feat];
            let c: i64 = s
                .parse()
                .map_err(|_| format_error(path, format!("line {line}: class label {s:?} is not an integer")))?;
            classes.push(c);
        }
        n += 1;
    }
    let Some(p) = cols else {
        return Err(format_error(path, "file has no rows"));
    };
    let m = DenseMatrix::from_row_major(n, p, values)?;
    Ok((Dataset::new(m), with_class.then_some(classes)))
}

/// Writes samples as headerless CSV with shortest round-trip formatting.
pub fn write_samples_csv(path: &Path, data: &Dataset) -> Result<()> {
    let mut out = std::io::BufWriter::new(std::fs::File::create(path)?);
    for row in data.rows() {
        let line: Vec<String> = row.iter().map(|v| format!("{v:?}")).collect();
        writeln!(out, "{}", line.join(","))?;
    }
    out.flush()?;
    Ok(())
}
