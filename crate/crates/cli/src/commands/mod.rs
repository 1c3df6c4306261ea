//! Subcommand implementations and shared artifact writers.

pub mod diagnose;
pub mod gen;
pub mod run_dm;
pub mod run_linear;

use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::Path;

use simprop_core::diagnostics::Acf;

use crate::errors::CliResult;

pub fn ensure_dir(dir: &Path) -> CliResult<()> {
    std::fs::create_dir_all(dir)?;
    Ok(())
}

pub fn write_text(path: &Path, text: &str) -> CliResult<()> {
    let mut w = BufWriter::new(File::create(path)?);
    w.write_all(text.as_bytes())?;
    Ok(())
}

pub fn write_lambda_trajectory(path: &Path, lambdas: &[f64], categories: usize) -> CliResult<()> {
    let mut w = BufWriter::new(File::create(path)?);
    if categories <= 1 {
        writeln!(w, "iteration,lambda")?;
        for (t, l) in lambdas.iter().enumerate() {
            writeln!(w, "{},{}", t + 1, l)?;
        }
    } else {
        let header: Vec<String> = (0..categories).map(|j| format!("lambda_{j}")).collect();
        writeln!(w, "iteration,{}", header.join(","))?;
        for t in 0..lambdas.len() / categories {
            let cells: Vec<String> = (0..categories)
                .map(|j| format!("{}", lambdas[t * categories + j]))
                .collect();
            writeln!(w, "{},{}", t + 1, cells.join(","))?;
        }
    }
    Ok(())
}

pub fn write_hamming_csv(path: &Path, bins: &[u64; 4]) -> CliResult<()> {
    let mut w = BufWriter::new(File::create(path)?);
    writeln!(w, "d_h,count")?;
    for (d, count) in bins.iter().enumerate() {
        let label = if d == 3 { "3+".to_string() } else { d.to_string() };
        writeln!(w, "{label},{count}")?;
    }
    Ok(())
}

pub fn write_pip_csv(path: &Path, pips: &[f64]) -> CliResult<()> {
    let mut w = BufWriter::new(File::create(path)?);
    writeln!(w, "predictor,pip")?;
    for (p, v) in pips.iter().enumerate() {
        writeln!(w, "{p},{v}")?;
    }
    Ok(())
}

pub fn write_pip_matrix_csv(path: &Path, pips: &[Vec<f64>]) -> CliResult<()> {
    let mut w = BufWriter::new(File::create(path)?);
    writeln!(w, "category,predictor,pip")?;
    for (j, row) in pips.iter().enumerate() {
        for (p, v) in row.iter().enumerate() {
            writeln!(w, "{j},{p},{v}")?;
        }
    }
    Ok(())
}

pub fn write_acf_csv(path: &Path, acf: &Acf) -> CliResult<()> {
    let mut w = BufWriter::new(File::create(path)?);
    writeln!(w, "lag,acf")?;
    for (lag, v) in acf.values.iter().enumerate() {
        writeln!(w, "{lag},{v}")?;
    }
    Ok(())
}

pub fn write_acceptance_vs_lambda(path: &Path, lambdas: &[f64], rates: &[f64]) -> CliResult<()> {
    let mut w = BufWriter::new(File::create(path)?);
    writeln!(w, "lambda,acceptance")?;
    for (l, r) in lambdas.iter().zip(rates) {
        writeln!(w, "{l},{r}")?;
    }
    Ok(())
}

pub fn write_json(path: &Path, value: &serde_json::Value) -> CliResult<()> {
    let text = serde_json::to_string_pretty(value)
        .map_err(|e| crate::errors::CliError::data(format!("json serialization: {e}")))?;
    write_text(path, &text)
}
