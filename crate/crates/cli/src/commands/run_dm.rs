//! `simprop run-dm`: reversible-jump variable selection for
//! Dirichlet-Multinomial regression on counts + covariates.

use std::fs::File;
use std::io::BufWriter;
use std::path::Path;

use simprop_core::diagnostics::{autocorrelation, bayes_fdr_threshold};
use simprop_core::dirmult::{DmData, DmPriors};
use simprop_core::numcore::linalg::Matrix;
use simprop_core::numcore::rng::RngSeed;
use simprop_core::rjmcmc::{run_rjmcmc, RjConfig, RjTrace};
use simprop_core::synthgen::{gen_dm, standardize_columns, DmSynthConfig};
use simprop_core::traceio::{write_configs_bin, write_rj_csv};

use crate::commands::{
    ensure_dir, write_acf_csv, write_json, write_lambda_trajectory, write_pip_matrix_csv,
    write_text,
};
use crate::config::{config_hash, to_resolved_json, DmRunConfig};
use crate::data::{read_counts_csv, read_matrix_csv};
use crate::errors::{CliError, CliResult};

fn load_data(config: &DmRunConfig) -> CliResult<(Vec<Vec<u64>>, Matrix)> {
    let spec = &config.data;
    match (&spec.counts_csv, &spec.x_csv, &spec.synth) {
        (Some(counts_path), Some(x_path), None) => {
            let counts = read_counts_csv(Path::new(counts_path))?;
            let mut x = read_matrix_csv(Path::new(x_path))?;
            if counts.len() != x.rows() {
                return Err(CliError::data(format!(
                    "Y has {} rows but X has {}",
                    counts.len(),
                    x.rows()
                )));
            }
            if config.standardize {
                let constant = standardize_columns(&mut x);
                for c in constant {
                    eprintln!("warning: column {c} is constant after standardization");
                }
            }
            Ok((counts, x))
        }
        (None, None, Some(synth)) => {
            let data = gen_dm(&DmSynthConfig {
                n: synth.n,
                p: synth.p,
                categories: synth.categories,
                associations: synth.associations.clone(),
                rho: synth.rho,
                depth_base: synth.depth_base,
                depth_mean: synth.depth_mean,
                seed: RngSeed(config.seed),
            })?;
            Ok((data.counts, data.x))
        }
        _ => Err(CliError::config(
            "data must supply either counts_csv and x_csv or a synth block",
        )),
    }
}

/// Pairs (category acceptance, swap rates) and selection tables computed
/// from a reversible-jump trace; shared with `diagnose`.
pub fn summary_from_trace(
    seed: u64,
    hash: &str,
    fdr_alpha: f64,
    pip_threshold: f64,
    hyper: &serde_json::Value,
    trace: &RjTrace,
) -> CliResult<serde_json::Value> {
    let burn = trace.burn_in;
    let cats = trace.categories;
    let total = trace.len();
    let post = total - burn;

    let beta0_rate = trace.beta0_accepted[burn..].iter().filter(|&&a| a).count() as f64 / post as f64;
    let mut cat_rates = Vec::with_capacity(cats);
    let mut swap_rates: Vec<Option<f64>> = Vec::with_capacity(cats);
    for j in 0..cats {
        let accepted = (burn..total)
            .filter(|&t| trace.cat_accepted[t * cats + j])
            .count();
        cat_rates.push(accepted as f64 / post as f64);
        let attempts = (burn..total)
            .filter(|&t| trace.swap_attempted[t * cats + j])
            .count();
        if attempts == 0 {
            swap_rates.push(None);
        } else {
            let acc = (burn..total)
                .filter(|&t| trace.swap_accepted[t * cats + j])
                .count();
            swap_rates.push(Some(acc as f64 / attempts as f64));
        }
    }
    let final_lambdas: Vec<f64> = (0..cats)
        .map(|j| trace.lambda[(total - 1) * cats + j])
        .collect();
    let mean_size: f64 =
        (burn..total).map(|t| trace.model_size_at(t) as f64).sum::<f64>() / post as f64;

    let pips = trace.pip_matrix(burn).map_err(|e| CliError::Numerical(e.to_string()))?;
    let flat: Vec<f64> = pips.iter().flatten().copied().collect();
    let (selected_flat, threshold) = bayes_fdr_threshold(&flat, fdr_alpha)?;
    let p = trace.num_predictors;
    let to_triple = |flat_idx: usize| {
        let j = flat_idx / p;
        let pred = flat_idx % p;
        serde_json::json!({ "predictor": pred, "category": j, "pip": pips[j][pred] })
    };
    let selected_fdr: Vec<serde_json::Value> = selected_flat.iter().map(|&i| to_triple(i)).collect();
    let selected_threshold: Vec<serde_json::Value> = (0..flat.len())
        .filter(|&i| flat[i] > pip_threshold)
        .map(to_triple)
        .collect();

    Ok(serde_json::json!({
        "kind": "dm",
        "seed": seed,
        "config_hash": hash,
        "iterations": total,
        "burn_in": burn,
        "hyperparameters": hyper,
        "beta0_acceptance_rate": beta0_rate,
        "category_acceptance_rates": cat_rates,
        "swap_acceptance_rates": swap_rates,
        "final_lambdas": final_lambdas,
        "model_size_mean": mean_size,
        "fdr_alpha": fdr_alpha,
        "fdr_threshold": threshold,
        "selected_fdr": selected_fdr,
        "pip_threshold": pip_threshold,
        "selected_pip_threshold": selected_threshold,
    }))
}

pub fn run(mut config: DmRunConfig) -> CliResult<()> {
    crate::config::apply_output_override(&mut config.output_dir);
    let resolved = to_resolved_json(&config)?;
    let hash = config_hash(&resolved);
    let out = Path::new(&config.output_dir).to_path_buf();
    ensure_dir(&out)?;
    write_text(&out.join("config.resolved"), &resolved)?;

    let (counts, x) = load_data(&config)?;
    let data = DmData::new(&counts, x).map_err(|e| CliError::data(e.to_string()))?;
    let cats = data.categories();

    let mut rj = RjConfig::new(
        config.sampler.iterations,
        config.sampler.burn_in,
        cats,
        RngSeed(config.seed),
    );
    let ps = &config.sampler.priors;
    rj.priors = DmPriors {
        s2: vec![ps.s2; cats],
        r2: vec![ps.r2; cats],
        a: ps.a,
        b: ps.b,
        c: ps.c,
    };
    rj.initial_lambda = config.sampler.initial_lambda;
    rj.adapt = config.adapt.to_core(config.sampler.iterations);
    rj.local_move = config.sampler.local_move;
    rj.lambda_move = config.sampler.lambda_move;
    rj.graph_threshold = config.sampler.graph_threshold;

    let trace = run_rjmcmc(&data, &rj)?;

    let mut csv = BufWriter::new(File::create(out.join("trace.csv"))?);
    write_rj_csv(&trace, &mut csv)?;
    drop(csv);
    let mut bin = BufWriter::new(File::create(out.join("configs.bin"))?);
    write_configs_bin(
        trace.num_predictors * trace.categories,
        trace.words_per_config,
        &trace.configs,
        &mut bin,
    )?;
    drop(bin);

    write_lambda_trajectory(&out.join("lambda_trajectories.csv"), &trace.lambda, cats)?;
    let pips = trace.pip_matrix(trace.burn_in)?;
    write_pip_matrix_csv(&out.join("pip_matrix.csv"), &pips)?;
    let sizes: Vec<f64> = (trace.burn_in..trace.len())
        .map(|t| trace.model_size_at(t) as f64)
        .collect();
    let max_lag = config.diagnostics.acf_max_lag.min(sizes.len().saturating_sub(1));
    write_acf_csv(&out.join("acf.csv"), &autocorrelation(&sizes, max_lag)?)?;

    // The summary echoes the hyperparameters in force.
    let hyper = serde_json::json!({
        "c": ps.c, "a": ps.a, "b": ps.b, "r2": ps.r2, "s2": ps.s2,
        "initial_lambda": config.sampler.initial_lambda,
    });
    let summary = summary_from_trace(
        config.seed,
        &hash,
        config.diagnostics.fdr_alpha,
        config.diagnostics.pip_threshold,
        &hyper,
        &trace,
    )?;
    write_json(&out.join("summary.json"), &summary)?;

    if !trace.diagnostics.is_empty() {
        write_text(&out.join("diagnostics.log"), &(trace.diagnostics.join("\n") + "\n"))?;
    }
    eprintln!(
        "run finished: {} selected at FDR {}, outputs in {}",
        summary["selected_fdr"].as_array().map_or(0, |a| a.len()),
        config.diagnostics.fdr_alpha,
        out.display()
    );
    Ok(())
}
