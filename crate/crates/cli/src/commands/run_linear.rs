//! `simprop run-linear`: the conjugate linear variable-selection chain, or
//! an acceptance-vs-λ sweep when requested.

use std::fs::File;
use std::io::BufWriter;
use std::path::Path;

use simprop_core::conjlinear::{enumerate_posterior, LinearProblem};
use simprop_core::diagnostics::{autocorrelation, bayes_fdr_threshold, hamming_histogram, pip};
use simprop_core::inclusion::InclusionVector;
use simprop_core::linsampler::{lambda_sweep, run_chain, ChainTrace, SamplerConfig};
use simprop_core::localmove::{estimate_graph, parse_adjacency, DependencyGraph};
use simprop_core::numcore::linalg::Matrix;
use simprop_core::numcore::rng::RngSeed;
use simprop_core::synthgen::{gen_linear, standardize_columns, LinearSynthConfig};
use simprop_core::traceio::{write_chain_csv, write_configs_bin};

use crate::commands::{
    ensure_dir, write_acceptance_vs_lambda, write_acf_csv, write_hamming_csv, write_json,
    write_lambda_trajectory, write_pip_csv, write_text,
};
use crate::config::{config_hash, to_resolved_json, LinearRunConfig};
use crate::data::{read_matrix_csv, read_response_csv};
use crate::errors::{CliError, CliResult};

/// Loads or generates the design and response per the data spec.
fn load_data(config: &LinearRunConfig) -> CliResult<(Matrix, Vec<f64>)> {
    let spec = &config.data;
    match (&spec.x_csv, &spec.y_csv, &spec.synth) {
        (Some(x_path), Some(y_path), None) => {
            let mut x = read_matrix_csv(Path::new(x_path))?;
            let y = read_response_csv(Path::new(y_path))?;
            if y.len() != x.rows() {
                return Err(CliError::data(format!(
                    "X has {} rows but y has {}",
                    x.rows(),
                    y.len()
                )));
            }
            if config.standardize {
                let constant = standardize_columns(&mut x);
                for c in constant {
                    eprintln!("warning: column {c} is constant after standardization");
                }
            }
            Ok((x, y))
        }
        (None, None, Some(synth)) => {
            let data = gen_linear(&LinearSynthConfig {
                n: synth.n,
                p: synth.p,
                n_active: synth.n_active,
                rho: synth.rho,
                sigma2: synth.sigma2,
                seed: RngSeed(config.seed),
            })?;
            Ok((data.x, data.y))
        }
        _ => Err(CliError::config(
            "data must supply either x_csv and y_csv or a synth block",
        )),
    }
}

fn resolve_graph(
    config: &LinearRunConfig,
    problem: &LinearProblem,
) -> CliResult<Option<DependencyGraph>> {
    if !config.sampler.swap {
        return Ok(None);
    }
    let spec = &config.sampler.graph;
    match spec.kind.as_str() {
        "correlation" => {
            let (graph, warnings) = estimate_graph(problem.design(), spec.threshold)?;
            for w in warnings {
                eprintln!("warning: {w}");
            }
            Ok(Some(graph))
        }
        "file" => {
            let path = spec.path.as_ref().ok_or_else(|| {
                CliError::config("graph.kind = \"file\" requires graph.path")
            })?;
            let text = std::fs::read_to_string(path)
                .map_err(|e| CliError::data(format!("{path}: {e}")))?;
            Ok(Some(parse_adjacency(&text, problem.num_predictors()).map_err(
                |e| CliError::data(format!("{path}: {e}")),
            )?))
        }
        other => Err(CliError::config(format!(
            "graph.kind must be \"correlation\" or \"file\", got {other:?}"
        ))),
    }
}

pub fn summary_from_trace(
    config: &LinearRunConfig,
    hash: &str,
    trace: &ChainTrace,
) -> CliResult<serde_json::Value> {
    let burn = trace.burn_in;
    let pips = pip(trace, burn)?;
    let (selected, threshold) =
        bayes_fdr_threshold(&pips.probabilities, config.diagnostics.fdr_alpha)?;
    let over_threshold: Vec<usize> = pips
        .probabilities
        .iter()
        .enumerate()
        .filter(|(_, &v)| v > config.diagnostics.pip_threshold)
        .map(|(i, _)| i)
        .collect();
    let post: Vec<usize> = (burn..trace.len()).collect();
    let mean_size: f64 =
        post.iter().map(|&t| trace.model_size_at(t) as f64).sum::<f64>() / post.len() as f64;
    Ok(serde_json::json!({
        "kind": "linear",
        "seed": config.seed,
        "config_hash": hash,
        "iterations": trace.len(),
        "burn_in": burn,
        "flip_acceptance_rate": trace.flip_acceptance_rate(burn),
        "swap_acceptance_rate": trace.swap_acceptance_rate(burn),
        "final_lambda": trace.lambda.last().copied(),
        "model_size_mean": mean_size,
        "fdr_alpha": config.diagnostics.fdr_alpha,
        "fdr_threshold": threshold,
        "selected_fdr": selected,
        "pip_threshold": config.diagnostics.pip_threshold,
        "selected_pip_threshold": over_threshold,
    }))
}

pub fn run(mut config: LinearRunConfig) -> CliResult<()> {
    crate::config::apply_output_override(&mut config.output_dir);
    let resolved = to_resolved_json(&config)?;
    let hash = config_hash(&resolved);
    let out = Path::new(&config.output_dir).to_path_buf();
    ensure_dir(&out)?;
    write_text(&out.join("config.resolved"), &resolved)?;

    let (x, y) = load_data(&config)?;
    let problem = LinearProblem::with_default_priors(x, y)
        .map_err(|e| CliError::data(e.to_string()))?;

    if let Some(sweep) = &config.sweep {
        let lambdas = sweep.lambdas();
        let rates = lambda_sweep(
            &problem,
            &lambdas,
            sweep.iterations,
            sweep.burn_in,
            config.sampler.dissim_kind()?,
            RngSeed(config.seed),
        )?;
        write_acceptance_vs_lambda(&out.join("acceptance_vs_lambda.csv"), &lambdas, &rates)?;
        let summary = serde_json::json!({
            "kind": "linear-sweep",
            "seed": config.seed,
            "config_hash": hash,
            "iterations": sweep.iterations,
            "burn_in": sweep.burn_in,
            "lambdas": lambdas,
            "acceptance_rates": rates,
        });
        write_json(&out.join("summary.json"), &summary)?;
        eprintln!("sweep finished: {} λ values → {}", lambdas.len(), out.display());
        return Ok(());
    }

    let graph = resolve_graph(&config, &problem)?;
    let mut sampler = SamplerConfig::new(
        config.sampler.iterations,
        config.sampler.burn_in,
        config.sampler.dissim_kind()?,
        RngSeed(config.seed),
    );
    sampler.initial_lambda = config.sampler.initial_lambda;
    sampler.swap_enabled = config.sampler.swap;
    sampler.lambda_move = config.sampler.lambda_move;
    sampler.adapt = config.adapt.to_core(config.sampler.iterations);
    if !config.sampler.initial_active.is_empty() {
        let p = problem.num_predictors();
        for &i in &config.sampler.initial_active {
            if i >= p {
                return Err(CliError::config(format!(
                    "initial_active index {i} out of range for P = {p}"
                )));
            }
        }
        sampler.initial_state = Some(InclusionVector::from_active_indices(
            p,
            &config.sampler.initial_active,
        ));
    }

    let trace = run_chain(&problem, graph.as_ref(), &sampler)?;

    // Trace artifacts.
    let mut csv = BufWriter::new(File::create(out.join("trace.csv"))?);
    write_chain_csv(&trace, &mut csv)?;
    drop(csv);
    let mut bin = BufWriter::new(File::create(out.join("configs.bin"))?);
    write_configs_bin(trace.num_predictors, trace.words_per_config, &trace.configs, &mut bin)?;
    drop(bin);

    // Plot-ready diagnostics.
    write_lambda_trajectory(&out.join("lambda_trajectory.csv"), &trace.lambda, 1)?;
    write_hamming_csv(&out.join("hamming.csv"), &hamming_histogram(&trace))?;
    let pips = pip(&trace, trace.burn_in)?;
    write_pip_csv(&out.join("pip.csv"), &pips.probabilities)?;
    let sizes: Vec<f64> = (trace.burn_in..trace.len())
        .map(|t| trace.model_size_at(t) as f64)
        .collect();
    let max_lag = config.diagnostics.acf_max_lag.min(sizes.len().saturating_sub(1));
    write_acf_csv(&out.join("acf.csv"), &autocorrelation(&sizes, max_lag)?)?;

    let summary = summary_from_trace(&config, &hash, &trace)?;
    write_json(&out.join("summary.json"), &summary)?;

    if !trace.diagnostics.is_empty() {
        write_text(&out.join("diagnostics.log"), &(trace.diagnostics.join("\n") + "\n"))?;
    }

    if config.exact {
        let p = problem.num_predictors();
        if p > 12 {
            return Err(CliError::config(format!(
                "--exact requires P ≤ 12 for full enumeration, got {p}"
            )));
        }
        let exact = enumerate_posterior(&problem)?;
        let mut counts = vec![0usize; 1 << p];
        for t in trace.burn_in..trace.len() {
            counts[trace.config_at(t).words()[0] as usize] += 1;
        }
        let total = (trace.len() - trace.burn_in) as f64;
        let tv: f64 = 0.5
            * exact
                .iter()
                .zip(&counts)
                .map(|(e, &c)| (e - c as f64 / total).abs())
                .sum::<f64>();
        write_json(
            &out.join("exact.json"),
            &serde_json::json!({ "tv_distance_to_enumerated_posterior": tv }),
        )?;
        eprintln!("TV distance to enumerated posterior: {tv:.5}");
    }

    eprintln!(
        "run finished: flip acceptance {:.4}, outputs in {}",
        trace.flip_acceptance_rate(trace.burn_in),
        out.display()
    );
    Ok(())
}
