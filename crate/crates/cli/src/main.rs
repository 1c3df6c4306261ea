//! Experiment CLI: generate synthetic datasets, run the similarity-driven
//! variable-selection samplers, and recompute diagnostics from stored
//! traces. Exit codes: 0 success, 2 configuration error, 3 data error,
//! 4 numerical failure.

mod commands;
mod config;
mod data;
mod errors;

use std::path::PathBuf;

use clap::{Args, Parser, Subcommand};

use config::{
    load_json, DmRunConfig, DmSamplerSpec, DmSynthSpec, LinearRunConfig, LinearSamplerSpec,
    LinearSynthSpec, SweepSpec,
};
use errors::{CliError, CliResult};

#[derive(Parser)]
#[command(
    name = "simprop",
    version,
    about = "Similarity-driven MCMC for discrete model spaces: conjugate linear variable selection and reversible-jump Dirichlet-Multinomial regression"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Generate a synthetic dataset with its planted truth.
    Gen(GenArgs),
    /// Run the conjugate linear variable-selection chain (or a λ sweep).
    RunLinear(RunLinearArgs),
    /// Run the reversible-jump Dirichlet-Multinomial sampler.
    RunDm(RunDmArgs),
    /// Recompute diagnostics from a finished run directory.
    Diagnose(DiagnoseArgs),
}

#[derive(Args)]
struct GenArgs {
    /// Dataset kind: "linear" or "dm".
    #[arg(long)]
    kind: String,
    /// Output directory for X.csv, y.csv / Y.csv and truth.json.
    #[arg(long)]
    out: PathBuf,
    #[arg(long, default_value_t = 42)]
    seed: u64,
    #[arg(long, default_value_t = 200)]
    n: usize,
    #[arg(long, default_value_t = 500)]
    p: usize,
    /// Number of active predictors (linear).
    #[arg(long, default_value_t = 5)]
    n_active: usize,
    #[arg(long, default_value_t = 0.9)]
    rho: f64,
    #[arg(long, default_value_t = 1.0)]
    sigma2: f64,
    /// Number of count categories (dm).
    #[arg(long, default_value_t = 5)]
    categories: usize,
    /// Planted association "predictor:category:coefficient" (dm); repeatable.
    #[arg(long = "association")]
    associations: Vec<String>,
    #[arg(long, default_value_t = 1000)]
    depth_base: u64,
    #[arg(long, default_value_t = 500.0)]
    depth_mean: f64,
    /// Overwrite existing dataset files.
    #[arg(long)]
    force: bool,
}

#[derive(Args)]
struct RunLinearArgs {
    /// JSON configuration file; flags below override its fields.
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long)]
    out: Option<PathBuf>,
    /// Design matrix CSV.
    #[arg(long)]
    x: Option<PathBuf>,
    /// Response CSV.
    #[arg(long)]
    y: Option<PathBuf>,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    iterations: Option<usize>,
    #[arg(long)]
    burn_in: Option<usize>,
    /// Dissimilarity: "f" or "lr".
    #[arg(long)]
    dissim: Option<String>,
    #[arg(long)]
    initial_lambda: Option<f64>,
    /// Disable the graph-guided swap move.
    #[arg(long)]
    no_swap: bool,
    /// Adjacency file for the swap graph (overrides correlation estimation).
    #[arg(long)]
    graph_file: Option<PathBuf>,
    #[arg(long)]
    graph_threshold: Option<f64>,
    /// Disable λ adaptation (fixed initial λ).
    #[arg(long)]
    no_adapt: bool,
    /// Acceptance-vs-λ sweep "start:end:count" instead of a single run.
    #[arg(long)]
    sweep_lambda: Option<String>,
    /// Also compare against the enumerated posterior (P ≤ 12).
    #[arg(long)]
    exact: bool,
    /// Ingest covariates as-is instead of standardizing them.
    #[arg(long)]
    no_standardize: bool,
}

#[derive(Args)]
struct RunDmArgs {
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long)]
    out: Option<PathBuf>,
    /// Count matrix CSV.
    #[arg(long)]
    counts: Option<PathBuf>,
    /// Covariate matrix CSV.
    #[arg(long)]
    x: Option<PathBuf>,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    iterations: Option<usize>,
    #[arg(long)]
    burn_in: Option<usize>,
    /// Initial λ for every category.
    #[arg(long)]
    initial_lambda: Option<f64>,
    /// Enable the local swap step after each category update.
    #[arg(long)]
    local_move: bool,
    #[arg(long)]
    no_standardize: bool,
}

#[derive(Args)]
struct DiagnoseArgs {
    /// Run directory containing config.resolved, trace.csv and configs.bin.
    #[arg(long)]
    run: PathBuf,
    /// Output directory (defaults to <run>/diagnose).
    #[arg(long)]
    out: Option<PathBuf>,
    /// Maximum autocorrelation lag; the ACF file gets max_lag + 1 rows.
    #[arg(long)]
    acf_maxlag: Option<usize>,
}

fn parse_association(text: &str) -> CliResult<(usize, usize, f64)> {
    let parts: Vec<&str> = text.split(':').collect();
    if parts.len() != 3 {
        return Err(CliError::config(format!(
            "association must be predictor:category:coefficient, got {text:?}"
        )));
    }
    let p = parts[0]
        .parse()
        .map_err(|_| CliError::config(format!("bad predictor index in {text:?}")))?;
    let j = parts[1]
        .parse()
        .map_err(|_| CliError::config(format!("bad category index in {text:?}")))?;
    let coef = parts[2]
        .parse()
        .map_err(|_| CliError::config(format!("bad coefficient in {text:?}")))?;
    Ok((p, j, coef))
}

fn parse_sweep(text: &str) -> CliResult<SweepSpec> {
    let parts: Vec<&str> = text.split(':').collect();
    if parts.len() != 3 {
        return Err(CliError::config(format!(
            "--sweep-lambda must be start:end:count, got {text:?}"
        )));
    }
    let start: f64 = parts[0]
        .parse()
        .map_err(|_| CliError::config(format!("bad sweep start in {text:?}")))?;
    let end: f64 = parts[1]
        .parse()
        .map_err(|_| CliError::config(format!("bad sweep end in {text:?}")))?;
    let count: usize = parts[2]
        .parse()
        .map_err(|_| CliError::config(format!("bad sweep count in {text:?}")))?;
    if count == 0 || !(start > 0.0) || end < start {
        return Err(CliError::config("sweep needs 0 < start ≤ end and count ≥ 1"));
    }
    Ok(SweepSpec {
        start,
        end,
        count,
        iterations: 20_000,
        burn_in: 10_000,
    })
}

fn cmd_gen(args: GenArgs) -> CliResult<()> {
    match args.kind.as_str() {
        "linear" => {
            let spec = LinearSynthSpec {
                n: args.n,
                p: args.p,
                n_active: args.n_active,
                rho: args.rho,
                sigma2: args.sigma2,
            };
            commands::gen::gen_linear_files(&args.out, &spec, args.seed, args.force)
        }
        "dm" => {
            let mut associations = Vec::new();
            for a in &args.associations {
                associations.push(parse_association(a)?);
            }
            let spec = DmSynthSpec {
                n: args.n,
                p: args.p,
                categories: args.categories,
                associations,
                rho: args.rho,
                depth_base: args.depth_base,
                depth_mean: args.depth_mean,
            };
            commands::gen::gen_dm_files(&args.out, &spec, args.seed, args.force)
        }
        other => Err(CliError::config(format!(
            "--kind must be \"linear\" or \"dm\", got {other:?}"
        ))),
    }
}

fn cmd_run_linear(args: RunLinearArgs) -> CliResult<()> {
    let mut config: LinearRunConfig = match &args.config {
        Some(path) => load_json(path)?,
        None => LinearRunConfig {
            kind: "linear".into(),
            data: config::LinearDataSpec {
                x_csv: None,
                y_csv: None,
                synth: None,
            },
            sampler: LinearSamplerSpec::default(),
            adapt: Default::default(),
            diagnostics: Default::default(),
            sweep: None,
            exact: false,
            standardize: true,
            output_dir: "simprop-run".into(),
            seed: 42,
        },
    };
    if config.kind != "linear" {
        return Err(CliError::config(format!(
            "config kind {:?} is not \"linear\"",
            config.kind
        )));
    }
    if let Some(x) = args.x {
        config.data.x_csv = Some(x.display().to_string());
        config.data.synth = None;
    }
    if let Some(y) = args.y {
        config.data.y_csv = Some(y.display().to_string());
    }
    if let Some(out) = args.out {
        config.output_dir = out.display().to_string();
    }
    if let Some(seed) = args.seed {
        config.seed = seed;
    }
    if let Some(iterations) = args.iterations {
        config.sampler.iterations = iterations;
    }
    if let Some(burn_in) = args.burn_in {
        config.sampler.burn_in = burn_in;
    }
    if let Some(dissim) = args.dissim {
        config.sampler.dissimilarity = dissim;
    }
    if let Some(lambda) = args.initial_lambda {
        config.sampler.initial_lambda = lambda;
    }
    if args.no_swap {
        config.sampler.swap = false;
    }
    if let Some(path) = args.graph_file {
        config.sampler.graph.kind = "file".into();
        config.sampler.graph.path = Some(path.display().to_string());
    }
    if let Some(threshold) = args.graph_threshold {
        config.sampler.graph.threshold = threshold;
    }
    if args.no_adapt {
        config.adapt.enabled = false;
    }
    if let Some(sweep) = args.sweep_lambda {
        config.sweep = Some(parse_sweep(&sweep)?);
    }
    if args.exact {
        config.exact = true;
    }
    if args.no_standardize {
        config.standardize = false;
    }
    commands::run_linear::run(config)
}

fn cmd_run_dm(args: RunDmArgs) -> CliResult<()> {
    let mut config: DmRunConfig = match &args.config {
        Some(path) => load_json(path)?,
        None => DmRunConfig {
            kind: "dm".into(),
            data: config::DmDataSpec {
                counts_csv: None,
                x_csv: None,
                synth: None,
            },
            sampler: DmSamplerSpec::default(),
            adapt: Default::default(),
            diagnostics: Default::default(),
            standardize: true,
            output_dir: "simprop-run".into(),
            seed: 42,
        },
    };
    if config.kind != "dm" {
        return Err(CliError::config(format!(
            "config kind {:?} is not \"dm\"",
            config.kind
        )));
    }
    if let Some(counts) = args.counts {
        config.data.counts_csv = Some(counts.display().to_string());
        config.data.synth = None;
    }
    if let Some(x) = args.x {
        config.data.x_csv = Some(x.display().to_string());
    }
    if let Some(out) = args.out {
        config.output_dir = out.display().to_string();
    }
    if let Some(seed) = args.seed {
        config.seed = seed;
    }
    if let Some(iterations) = args.iterations {
        config.sampler.iterations = iterations;
    }
    if let Some(burn_in) = args.burn_in {
        config.sampler.burn_in = burn_in;
    }
    if let Some(lambda) = args.initial_lambda {
        config.sampler.initial_lambda = lambda;
    }
    if args.local_move {
        config.sampler.local_move = true;
    }
    if args.no_standardize {
        config.standardize = false;
    }
    commands::run_dm::run(config)
}

fn main() {
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Gen(args) => cmd_gen(args),
        Command::RunLinear(args) => cmd_run_linear(args),
        Command::RunDm(args) => cmd_run_dm(args),
        Command::Diagnose(args) => commands::diagnose::run(&args.run, args.out, args.acf_maxlag),
    };
    if let Err(e) = result {
        eprintln!("error: {e}");
        std::process::exit(e.exit_code());
    }
}
