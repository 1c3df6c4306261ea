//! Run configuration: a JSON key-value tree with every default
//! materialized before anything runs. Unknown keys are rejected. The
//! resolved form is written to `config.resolved` in the output directory
//! and is sufficient to reproduce the run bit-for-bit on the same build.

use std::collections::hash_map::DefaultHasher;
use std::hash::{Hash, Hasher};
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::errors::{CliError, CliResult};

fn default_true() -> bool {
    true
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LinearSynthSpec {
    pub n: usize,
    pub p: usize,
    #[serde(default = "LinearSynthSpec::default_active")]
    pub n_active: usize,
    #[serde(default = "LinearSynthSpec::default_rho")]
    pub rho: f64,
    #[serde(default = "LinearSynthSpec::default_sigma2")]
    pub sigma2: f64,
}

impl LinearSynthSpec {
    fn default_active() -> usize {
        5
    }
    fn default_rho() -> f64 {
        0.9
    }
    fn default_sigma2() -> f64 {
        1.0
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DmSynthSpec {
    pub n: usize,
    pub p: usize,
    pub categories: usize,
    /// Planted (predictor, category, coefficient) triples.
    #[serde(default)]
    pub associations: Vec<(usize, usize, f64)>,
    #[serde(default)]
    pub rho: f64,
    #[serde(default = "DmSynthSpec::default_depth_base")]
    pub depth_base: u64,
    #[serde(default = "DmSynthSpec::default_depth_mean")]
    pub depth_mean: f64,
}

impl DmSynthSpec {
    fn default_depth_base() -> u64 {
        1000
    }
    fn default_depth_mean() -> f64 {
        500.0
    }
}

/// Where the design/response come from: files or a generator spec.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LinearDataSpec {
    #[serde(default)]
    pub x_csv: Option<String>,
    #[serde(default)]
    pub y_csv: Option<String>,
    #[serde(default)]
    pub synth: Option<LinearSynthSpec>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DmDataSpec {
    #[serde(default)]
    pub counts_csv: Option<String>,
    #[serde(default)]
    pub x_csv: Option<String>,
    #[serde(default)]
    pub synth: Option<DmSynthSpec>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AdaptSpec {
    #[serde(default = "default_true")]
    pub enabled: bool,
    #[serde(default = "AdaptSpec::default_window")]
    pub window: usize,
    #[serde(default = "AdaptSpec::default_scale_c")]
    pub scale_c: f64,
    #[serde(default = "AdaptSpec::default_decay")]
    pub decay: f64,
    #[serde(default = "AdaptSpec::default_lambda_min")]
    pub lambda_min: f64,
    #[serde(default = "AdaptSpec::default_lambda_max")]
    pub lambda_max: f64,
    #[serde(default = "AdaptSpec::default_t_start")]
    pub t_start: usize,
    /// Defaults to three quarters of the iteration count.
    #[serde(default)]
    pub t_end: Option<usize>,
}

impl AdaptSpec {
    fn default_window() -> usize {
        25
    }
    fn default_scale_c() -> f64 {
        1.0
    }
    fn default_decay() -> f64 {
        0.75
    }
    fn default_lambda_min() -> f64 {
        0.05
    }
    fn default_lambda_max() -> f64 {
        10.0
    }
    fn default_t_start() -> usize {
        100
    }
}

impl Default for AdaptSpec {
    fn default() -> Self {
        AdaptSpec {
            enabled: true,
            window: Self::default_window(),
            scale_c: Self::default_scale_c(),
            decay: Self::default_decay(),
            lambda_min: Self::default_lambda_min(),
            lambda_max: Self::default_lambda_max(),
            t_start: Self::default_t_start(),
            t_end: None,
        }
    }
}

impl AdaptSpec {
    pub fn to_core(&self, iterations: usize) -> simprop_core::adapt::AdaptConfig {
        if !self.enabled {
            return simprop_core::adapt::AdaptConfig::disabled();
        }
        simprop_core::adapt::AdaptConfig {
            window: self.window,
            scale_c: self.scale_c,
            decay: self.decay,
            lambda_min: self.lambda_min,
            lambda_max: self.lambda_max,
            t_start: self.t_start,
            t_end: self.t_end.unwrap_or(iterations * 3 / 4),
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GraphSpec {
    /// "correlation" (thresholded absolute correlations) or "file".
    #[serde(default = "GraphSpec::default_kind")]
    pub kind: String,
    #[serde(default = "GraphSpec::default_threshold")]
    pub threshold: f64,
    #[serde(default)]
    pub path: Option<String>,
}

impl GraphSpec {
    fn default_kind() -> String {
        "correlation".to_string()
    }
    fn default_threshold() -> f64 {
        0.5
    }
}

impl Default for GraphSpec {
    fn default() -> Self {
        GraphSpec {
            kind: Self::default_kind(),
            threshold: Self::default_threshold(),
            path: None,
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LinearSamplerSpec {
    #[serde(default = "LinearSamplerSpec::default_iterations")]
    pub iterations: usize,
    #[serde(default = "LinearSamplerSpec::default_burn_in")]
    pub burn_in: usize,
    /// "f" or "lr".
    #[serde(default = "LinearSamplerSpec::default_dissimilarity")]
    pub dissimilarity: String,
    #[serde(default = "LinearSamplerSpec::default_initial_lambda")]
    pub initial_lambda: f64,
    #[serde(default = "default_true")]
    pub swap: bool,
    #[serde(default = "LinearSamplerSpec::default_lambda_move")]
    pub lambda_move: f64,
    #[serde(default)]
    pub graph: GraphSpec,
    /// Initially active predictor indices; empty model by default.
    #[serde(default)]
    pub initial_active: Vec<usize>,
}

impl LinearSamplerSpec {
    fn default_iterations() -> usize {
        20_000
    }
    fn default_burn_in() -> usize {
        10_000
    }
    fn default_dissimilarity() -> String {
        "f".to_string()
    }
    fn default_initial_lambda() -> f64 {
        0.7
    }
    fn default_lambda_move() -> f64 {
        1.25
    }

    pub fn dissim_kind(&self) -> CliResult<simprop_core::conjlinear::DissimKind> {
        match self.dissimilarity.as_str() {
            "f" | "F" => Ok(simprop_core::conjlinear::DissimKind::FTest),
            "lr" | "LR" => Ok(simprop_core::conjlinear::DissimKind::LikelihoodRatio),
            other => Err(CliError::config(format!(
                "dissimilarity must be \"f\" or \"lr\", got {other:?}"
            ))),
        }
    }
}

impl Default for LinearSamplerSpec {
    fn default() -> Self {
        LinearSamplerSpec {
            iterations: Self::default_iterations(),
            burn_in: Self::default_burn_in(),
            dissimilarity: Self::default_dissimilarity(),
            initial_lambda: Self::default_initial_lambda(),
            swap: true,
            lambda_move: Self::default_lambda_move(),
            graph: GraphSpec::default(),
            initial_active: Vec::new(),
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SweepSpec {
    pub start: f64,
    pub end: f64,
    pub count: usize,
    #[serde(default = "SweepSpec::default_iterations")]
    pub iterations: usize,
    #[serde(default = "SweepSpec::default_burn_in")]
    pub burn_in: usize,
}

impl SweepSpec {
    fn default_iterations() -> usize {
        20_000
    }
    fn default_burn_in() -> usize {
        10_000
    }

    pub fn lambdas(&self) -> Vec<f64> {
        if self.count == 1 {
            return vec![self.start];
        }
        (0..self.count)
            .map(|k| self.start + k as f64 * (self.end - self.start) / (self.count - 1) as f64)
            .collect()
    }
}

/// Prior hyperparameters for the DM model; defaults: c = 1, a = 1, b = 9, r² = s² = 10.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DmPriorSpec {
    #[serde(default = "DmPriorSpec::default_c")]
    pub c: f64,
    #[serde(default = "DmPriorSpec::default_a")]
    pub a: f64,
    #[serde(default = "DmPriorSpec::default_b")]
    pub b: f64,
    #[serde(default = "DmPriorSpec::default_r2")]
    pub r2: f64,
    #[serde(default = "DmPriorSpec::default_s2")]
    pub s2: f64,
}

impl DmPriorSpec {
    fn default_c() -> f64 {
        1.0
    }
    fn default_a() -> f64 {
        1.0
    }
    fn default_b() -> f64 {
        9.0
    }
    fn default_r2() -> f64 {
        10.0
    }
    fn default_s2() -> f64 {
        10.0
    }
}

impl Default for DmPriorSpec {
    fn default() -> Self {
        DmPriorSpec {
            c: Self::default_c(),
            a: Self::default_a(),
            b: Self::default_b(),
            r2: Self::default_r2(),
            s2: Self::default_s2(),
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DmSamplerSpec {
    #[serde(default = "DmSamplerSpec::default_iterations")]
    pub iterations: usize,
    #[serde(default = "DmSamplerSpec::default_burn_in")]
    pub burn_in: usize,
    #[serde(default = "DmSamplerSpec::default_initial_lambda")]
    pub initial_lambda: f64,
    #[serde(default)]
    pub local_move: bool,
    #[serde(default = "DmSamplerSpec::default_lambda_move")]
    pub lambda_move: f64,
    #[serde(default = "DmSamplerSpec::default_graph_threshold")]
    pub graph_threshold: f64,
    #[serde(default)]
    pub priors: DmPriorSpec,
}

impl DmSamplerSpec {
    fn default_iterations() -> usize {
        20_000
    }
    fn default_burn_in() -> usize {
        10_000
    }
    fn default_initial_lambda() -> f64 {
        1.0
    }
    fn default_lambda_move() -> f64 {
        1.25
    }
    fn default_graph_threshold() -> f64 {
        0.5
    }
}

impl Default for DmSamplerSpec {
    fn default() -> Self {
        DmSamplerSpec {
            iterations: Self::default_iterations(),
            burn_in: Self::default_burn_in(),
            initial_lambda: Self::default_initial_lambda(),
            local_move: false,
            lambda_move: Self::default_lambda_move(),
            graph_threshold: Self::default_graph_threshold(),
            priors: DmPriorSpec::default(),
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DiagnosticsSpec {
    #[serde(default = "DiagnosticsSpec::default_fdr_alpha")]
    pub fdr_alpha: f64,
    #[serde(default = "DiagnosticsSpec::default_acf_max_lag")]
    pub acf_max_lag: usize,
    #[serde(default = "DiagnosticsSpec::default_pip_threshold")]
    pub pip_threshold: f64,
}

impl DiagnosticsSpec {
    fn default_fdr_alpha() -> f64 {
        0.05
    }
    fn default_acf_max_lag() -> usize {
        50
    }
    fn default_pip_threshold() -> f64 {
        0.5
    }
}

impl Default for DiagnosticsSpec {
    fn default() -> Self {
        DiagnosticsSpec {
            fdr_alpha: Self::default_fdr_alpha(),
            acf_max_lag: Self::default_acf_max_lag(),
            pip_threshold: Self::default_pip_threshold(),
        }
    }
}

/// Full resolved configuration of a linear run.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LinearRunConfig {
    pub kind: String,
    pub data: LinearDataSpec,
    #[serde(default)]
    pub sampler: LinearSamplerSpec,
    #[serde(default)]
    pub adapt: AdaptSpec,
    #[serde(default)]
    pub diagnostics: DiagnosticsSpec,
    #[serde(default)]
    pub sweep: Option<SweepSpec>,
    /// Compare against the enumerated posterior (P ≤ 12 only).
    #[serde(default)]
    pub exact: bool,
    #[serde(default = "default_true")]
    pub standardize: bool,
    pub output_dir: String,
    #[serde(default = "default_seed")]
    pub seed: u64,
}

fn default_seed() -> u64 {
    42
}

/// Full resolved configuration of a DM run.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DmRunConfig {
    pub kind: String,
    pub data: DmDataSpec,
    #[serde(default)]
    pub sampler: DmSamplerSpec,
    #[serde(default)]
    pub adapt: AdaptSpec,
    #[serde(default)]
    pub diagnostics: DiagnosticsSpec,
    #[serde(default = "default_true")]
    pub standardize: bool,
    pub output_dir: String,
    #[serde(default = "default_seed")]
    pub seed: u64,
}

pub fn load_json<T: serde::de::DeserializeOwned>(path: &Path) -> CliResult<T> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| CliError::config(format!("cannot read config {}: {e}", path.display())))?;
    serde_json::from_str(&text).map_err(|e| CliError::config(format!("{}: {e}", path.display())))
}

/// Serializes a resolved config with stable key order.
pub fn to_resolved_json<T: Serialize>(config: &T) -> CliResult<String> {
    serde_json::to_string_pretty(config)
        .map_err(|e| CliError::config(format!("cannot serialize config: {e}")))
}

/// 64-bit hash of the resolved configuration text, reported in summaries.
pub fn config_hash(resolved: &str) -> String {
    let mut hasher = DefaultHasher::new();
    resolved.hash(&mut hasher);
    format!("{:016x}", hasher.finish())
}

/// The documented environment override for output directories.
pub fn apply_output_override(dir: &mut String) {
    if let Ok(out) = std::env::var("SIMPROP_OUT") {
        if !out.is_empty() {
            *dir = out;
        }
    }
}
