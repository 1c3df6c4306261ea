//! CSV ingestion and emission. Dialect: comma separator, '.' decimal,
//! header row, UTF-8, LF line endings.

use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::Path;

use simprop_core::numcore::linalg::Matrix;

use crate::errors::{CliError, CliResult};

/// Reads a numeric matrix CSV with a header row.
pub fn read_matrix_csv(path: &Path) -> CliResult<Matrix> {
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(true)
        .from_path(path)
        .map_err(|e| CliError::data(format!("{}: {e}", path.display())))?;
    let mut rows: Vec<Vec<f64>> = Vec::new();
    for (i, record) in reader.records().enumerate() {
        let record = record.map_err(|e| CliError::data(format!("{}: {e}", path.display())))?;
        let mut row = Vec::with_capacity(record.len());
        for (j, field) in record.iter().enumerate() {
            let v: f64 = field.trim().parse().map_err(|_| {
                CliError::data(format!(
                    "{}: row {}, column {} is not numeric: {field:?}",
                    path.display(),
                    i + 2,
                    j + 1
                ))
            })?;
            row.push(v);
        }
        if let Some(first) = rows.first() {
            if first.len() != row.len() {
                return Err(CliError::data(format!(
                    "{}: ragged row {} ({} fields, expected {})",
                    path.display(),
                    i + 2,
                    row.len(),
                    first.len()
                )));
            }
        }
        rows.push(row);
    }
    if rows.is_empty() {
        return Err(CliError::data(format!("{}: no data rows", path.display())));
    }
    Ok(Matrix::from_rows(&rows))
}

/// Reads a single-column response CSV.
pub fn read_response_csv(path: &Path) -> CliResult<Vec<f64>> {
    let m = read_matrix_csv(path)?;
    if m.cols() != 1 {
        return Err(CliError::data(format!(
            "{}: expected a single response column, found {}",
            path.display(),
            m.cols()
        )));
    }
    Ok((0..m.rows()).map(|i| m.get(i, 0)).collect())
}

/// Reads a nonnegative integer count matrix; negative or non-integer
/// entries are load errors.
pub fn read_counts_csv(path: &Path) -> CliResult<Vec<Vec<u64>>> {
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(true)
        .from_path(path)
        .map_err(|e| CliError::data(format!("{}: {e}", path.display())))?;
    let mut rows: Vec<Vec<u64>> = Vec::new();
    for (i, record) in reader.records().enumerate() {
        let record = record.map_err(|e| CliError::data(format!("{}: {e}", path.display())))?;
        let mut row = Vec::with_capacity(record.len());
        for (j, field) in record.iter().enumerate() {
            let trimmed = field.trim();
            let v: u64 = trimmed.parse().map_err(|_| {
                CliError::data(format!(
                    "{}: row {}, column {}: counts must be nonnegative integers, got {trimmed:?}",
                    path.display(),
                    i + 2,
                    j + 1
                ))
            })?;
            row.push(v);
        }
        if let Some(first) = rows.first() {
            if first.len() != row.len() {
                return Err(CliError::data(format!(
                    "{}: ragged row {}",
                    path.display(),
                    i + 2
                )));
            }
        }
        rows.push(row);
    }
    if rows.is_empty() {
        return Err(CliError::data(format!("{}: no data rows", path.display())));
    }
    Ok(rows)
}

pub fn write_matrix_csv(path: &Path, m: &Matrix, prefix: &str) -> CliResult<()> {
    let mut w = BufWriter::new(File::create(path)?);
    let header: Vec<String> = (0..m.cols()).map(|j| format!("{prefix}{j}")).collect();
    writeln!(w, "{}", header.join(","))?;
    for i in 0..m.rows() {
        let row: Vec<String> = m.row(i).iter().map(|v| format!("{v}")).collect();
        writeln!(w, "{}", row.join(","))?;
    }
    Ok(())
}

pub fn write_response_csv(path: &Path, y: &[f64]) -> CliResult<()> {
    let mut w = BufWriter::new(File::create(path)?);
    writeln!(w, "y")?;
    for v in y {
        writeln!(w, "{v}")?;
    }
    Ok(())
}

pub fn write_counts_csv(path: &Path, counts: &[Vec<u64>]) -> CliResult<()> {
    let mut w = BufWriter::new(File::create(path)?);
    let cats = counts.first().map_or(0, |r| r.len());
    let header: Vec<String> = (0..cats).map(|j| format!("c{j}")).collect();
    writeln!(w, "{}", header.join(","))?;
    for row in counts {
        let cells: Vec<String> = row.iter().map(|v| v.to_string()).collect();
        writeln!(w, "{}", cells.join(","))?;
    }
    Ok(())
}
