//! `simprop diagnose`: recompute every diagnostic from a run directory's
//! stored trace files. The recomputed summary must agree with the run-time
//! summary field for field, so this doubles as an integrity check.

use std::fs::File;
use std::io::BufReader;
use std::path::{Path, PathBuf};

use simprop_core::diagnostics::{autocorrelation, hamming_histogram, pip};
use simprop_core::inclusion::InclusionVector;
use simprop_core::linsampler::ChainTrace;
use simprop_core::rjmcmc::RjTrace;
use simprop_core::traceio::{read_chain_csv, read_configs_bin, ParsedConfigs};

use crate::commands::{
    ensure_dir, write_acf_csv, write_hamming_csv, write_json, write_lambda_trajectory,
    write_pip_csv, write_pip_matrix_csv,
};
use crate::config::{config_hash, DmRunConfig, LinearRunConfig};
use crate::errors::{CliError, CliResult};

fn read_file(path: &Path) -> CliResult<String> {
    std::fs::read_to_string(path).map_err(|e| CliError::data(format!("{}: {e}", path.display())))
}

fn read_bin(path: &Path) -> CliResult<ParsedConfigs> {
    let mut reader = BufReader::new(
        File::open(path).map_err(|e| CliError::data(format!("{}: {e}", path.display())))?,
    );
    read_configs_bin(&mut reader).map_err(|e| CliError::data(format!("{}: {e}", path.display())))
}

pub fn run(run_dir: &Path, out_dir: Option<PathBuf>, acf_max_lag: Option<usize>) -> CliResult<()> {
    let resolved = read_file(&run_dir.join("config.resolved"))?;
    let hash = config_hash(&resolved);
    let value: serde_json::Value = serde_json::from_str(&resolved)
        .map_err(|e| CliError::data(format!("config.resolved: {e}")))?;
    let kind = value
        .get("kind")
        .and_then(|k| k.as_str())
        .ok_or_else(|| CliError::data("config.resolved lacks a kind field"))?
        .to_string();

    let out = out_dir.unwrap_or_else(|| run_dir.join("diagnose"));
    ensure_dir(&out)?;

    match kind.as_str() {
        "linear" => diagnose_linear(run_dir, &out, &resolved, &hash, acf_max_lag),
        "dm" => diagnose_dm(run_dir, &out, &resolved, &hash, acf_max_lag),
        other => Err(CliError::data(format!(
            "cannot diagnose runs of kind {other:?}"
        ))),
    }
}

fn diagnose_linear(
    run_dir: &Path,
    out: &Path,
    resolved: &str,
    hash: &str,
    acf_max_lag: Option<usize>,
) -> CliResult<()> {
    let config: LinearRunConfig = serde_json::from_str(resolved)
        .map_err(|e| CliError::data(format!("config.resolved: {e}")))?;
    let parsed = read_chain_csv(BufReader::new(
        File::open(run_dir.join("trace.csv"))
            .map_err(|e| CliError::data(format!("trace.csv: {e}")))?,
    ))
    .map_err(|e| CliError::data(e.to_string()))?;
    let bin = read_bin(&run_dir.join("configs.bin"))?;
    if bin.rows != parsed.flip_accepted.len() {
        return Err(CliError::data(format!(
            "configs.bin has {} rows but trace.csv has {}",
            bin.rows,
            parsed.flip_accepted.len()
        )));
    }

    // Rebuild the trace; jump distances are recounted from the stored
    // configurations rather than trusted from the CSV.
    let words = bin.words_per_row;
    let mut hamming_jump = Vec::with_capacity(bin.rows);
    let mut prev = InclusionVector::empty(bin.bits);
    for t in 0..bin.rows {
        let cur = InclusionVector::from_words(
            bin.bits,
            bin.packed_words[t * words..(t + 1) * words].to_vec(),
        );
        hamming_jump.push(prev.hamming(&cur).map_err(|e| CliError::data(e.to_string()))? as u8);
        prev = cur;
    }
    for (t, (&recounted, &stored)) in hamming_jump.iter().zip(&parsed.hamming_jump).enumerate() {
        if t > 0 && recounted != stored {
            return Err(CliError::data(format!(
                "iteration {}: stored d_H {stored} disagrees with recount {recounted}",
                t + 1
            )));
        }
    }

    let trace = ChainTrace {
        num_predictors: bin.bits,
        burn_in: config.sampler.burn_in,
        words_per_config: words,
        configs: bin.packed_words,
        flip_accepted: parsed.flip_accepted,
        swap_attempted: parsed.swap_attempted,
        swap_accepted: parsed.swap_accepted,
        hamming_jump,
        lambda: parsed.lambda,
        log_post: parsed.log_post,
        diagnostics: Vec::new(),
    };

    write_hamming_csv(&out.join("hamming.csv"), &hamming_histogram(&trace))?;
    let pips = pip(&trace, trace.burn_in).map_err(|e| CliError::data(e.to_string()))?;
    write_pip_csv(&out.join("pip.csv"), &pips.probabilities)?;
    write_lambda_trajectory(&out.join("lambda_trajectory.csv"), &trace.lambda, 1)?;
    let sizes: Vec<f64> = (trace.burn_in..trace.len())
        .map(|t| trace.model_size_at(t) as f64)
        .collect();
    let max_lag = acf_max_lag
        .unwrap_or(config.diagnostics.acf_max_lag)
        .min(sizes.len().saturating_sub(1));
    write_acf_csv(&out.join("acf.csv"), &autocorrelation(&sizes, max_lag)?)?;

    let summary = super::run_linear::summary_from_trace(&config, hash, &trace)?;
    write_json(&out.join("summary.json"), &summary)?;
    eprintln!("diagnostics recomputed into {}", out.display());
    Ok(())
}

fn diagnose_dm(
    run_dir: &Path,
    out: &Path,
    resolved: &str,
    hash: &str,
    acf_max_lag: Option<usize>,
) -> CliResult<()> {
    let config: DmRunConfig = serde_json::from_str(resolved)
        .map_err(|e| CliError::data(format!("config.resolved: {e}")))?;
    let text = read_file(&run_dir.join("trace.csv"))?;
    let bin = read_bin(&run_dir.join("configs.bin"))?;

    // Parse the extended CSV by header position.
    let mut lines = text.lines();
    let header: Vec<&str> = lines
        .next()
        .ok_or_else(|| CliError::data("trace.csv is empty"))?
        .split(',')
        .collect();
    let cats = header.iter().filter(|h| h.starts_with("cat_acc_")).count();
    if cats == 0 || bin.bits % cats != 0 {
        return Err(CliError::data(
            "trace.csv header does not match the configuration stream",
        ));
    }
    let col = |name: &str| -> CliResult<usize> {
        header
            .iter()
            .position(|h| *h == name)
            .ok_or_else(|| CliError::data(format!("trace.csv lacks column {name}")))
    };
    let log_post_col = col("log_post")?;
    let beta0_acc_col = col("beta0_acc")?;
    let first_cat = col("cat_acc_0")?;
    let first_swap = col("swap_acc_0")?;
    let first_lambda = col("lambda_0")?;
    let first_beta0 = col("beta0_0")?;

    let mut trace = RjTrace {
        num_predictors: bin.bits / cats,
        categories: cats,
        burn_in: config.sampler.burn_in,
        words_per_config: bin.words_per_row,
        configs: bin.packed_words,
        beta0: Vec::new(),
        active_betas: Vec::new(),
        beta0_accepted: Vec::new(),
        cat_accepted: Vec::new(),
        swap_attempted: Vec::new(),
        swap_accepted: Vec::new(),
        lambda: Vec::new(),
        log_post: Vec::new(),
        diagnostics: Vec::new(),
    };
    for (lineno, line) in lines.enumerate() {
        if line.is_empty() {
            continue;
        }
        let fields: Vec<&str> = line.split(',').collect();
        let parse_f64 = |idx: usize| -> CliResult<f64> {
            fields[idx]
                .parse()
                .map_err(|e| CliError::data(format!("trace.csv line {}: {e}", lineno + 2)))
        };
        trace.log_post.push(parse_f64(log_post_col)?);
        trace.beta0_accepted.push(fields[beta0_acc_col] == "1");
        for j in 0..cats {
            trace.cat_accepted.push(fields[first_cat + j] == "1");
            match fields[first_swap + j] {
                "" => {
                    trace.swap_attempted.push(false);
                    trace.swap_accepted.push(false);
                }
                "0" => {
                    trace.swap_attempted.push(true);
                    trace.swap_accepted.push(false);
                }
                "1" => {
                    trace.swap_attempted.push(true);
                    trace.swap_accepted.push(true);
                }
                other => {
                    return Err(CliError::data(format!(
                        "trace.csv line {}: bad swap cell {other:?}",
                        lineno + 2
                    )))
                }
            }
            trace.lambda.push(parse_f64(first_lambda + j)?);
            trace.beta0.push(parse_f64(first_beta0 + j)?);
        }
        trace.active_betas.push(Vec::new());
    }
    if trace.len() != bin.rows {
        return Err(CliError::data(format!(
            "configs.bin has {} rows but trace.csv has {}",
            bin.rows,
            trace.len()
        )));
    }

    let pips = trace
        .pip_matrix(trace.burn_in)
        .map_err(|e| CliError::data(e.to_string()))?;
    write_pip_matrix_csv(&out.join("pip_matrix.csv"), &pips)?;
    write_lambda_trajectory(&out.join("lambda_trajectories.csv"), &trace.lambda, cats)?;
    let sizes: Vec<f64> = (trace.burn_in..trace.len())
        .map(|t| trace.model_size_at(t) as f64)
        .collect();
    let max_lag = acf_max_lag
        .unwrap_or(config.diagnostics.acf_max_lag)
        .min(sizes.len().saturating_sub(1));
    write_acf_csv(&out.join("acf.csv"), &autocorrelation(&sizes, max_lag)?)?;

    let ps = &config.sampler.priors;
    let hyper = serde_json::json!({
        "c": ps.c, "a": ps.a, "b": ps.b, "r2": ps.r2, "s2": ps.s2,
        "initial_lambda": config.sampler.initial_lambda,
    });
    let summary = super::run_dm::summary_from_trace(
        config.seed,
        hash,
        config.diagnostics.fdr_alpha,
        config.diagnostics.pip_threshold,
        &hyper,
        &trace,
    )?;
    write_json(&out.join("summary.json"), &summary)?;
    eprintln!("diagnostics recomputed into {}", out.display());
    Ok(())
}
