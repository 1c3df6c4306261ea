//! The complete variable-selection chain for the conjugate linear model.
//!
//! One iteration composes an adaptive similarity-driven flip move with an
//! optional graph-guided swap move, so per-iteration Hamming jumps take
//! values in {0, 1, 2, 3}: nothing, flip only, swap only, or both. λ
//! adaptation sees only flip acceptances; the swap exponent λ_move stays
//! fixed throughout.

use crate::adapt::{AdaptConfig, AdaptState};
use crate::conjlinear::{DissimKind, LinearProblem};
use crate::error::{CoreError, Result};
use crate::inclusion::InclusionVector;
use crate::localmove::{build_swap_proposal, mh_accept_swap, DependencyGraph};
use crate::numcore::rng::{chain_rng, RngSeed};
use crate::proposal::{build_proposal, mh_accept_flip, DissimilarityFn, ModelPosterior};

/// Full sampler configuration.
#[derive(Debug, Clone)]
pub struct SamplerConfig {
    pub total_iterations: usize,
    pub burn_in: usize,
    pub dissimilarity: DissimKind,
    /// λ at iteration 1; adapted inside the adaptation interval.
    pub initial_lambda: f64,
    pub adapt: AdaptConfig,
    pub swap_enabled: bool,
    /// Fixed exponent for swap weights (never adapted).
    pub lambda_move: f64,
    /// Starting configuration; the empty model when absent.
    pub initial_state: Option<InclusionVector>,
    pub seed: RngSeed,
    /// RNG stream, letting replicate chains share one master seed.
    pub stream: u64,
}

impl SamplerConfig {
    pub fn new(total_iterations: usize, burn_in: usize, dissimilarity: DissimKind, seed: RngSeed) -> Self {
        SamplerConfig {
            total_iterations,
            burn_in,
            dissimilarity,
            initial_lambda: 0.7,
            adapt: AdaptConfig::default_for(total_iterations),
            swap_enabled: false,
            lambda_move: 1.25,
            initial_state: None,
            seed,
            stream: 0,
        }
    }

    fn validate(&self) -> Result<()> {
        if self.total_iterations == 0 || self.burn_in >= self.total_iterations {
            return Err(CoreError::domain(
                "SamplerConfig",
                format!(
                    "need burn_in < total_iterations, got {} / {}",
                    self.burn_in, self.total_iterations
                ),
            ));
        }
        if !(self.initial_lambda > 0.0) {
            return Err(CoreError::domain("SamplerConfig", "initial lambda must be positive"));
        }
        if !(self.lambda_move > 0.0) {
            return Err(CoreError::domain("SamplerConfig", "lambda_move must be positive"));
        }
        self.adapt.validate(self.total_iterations)
    }
}

/// Per-iteration chain record. Configurations are bit-packed; everything a
/// diagnostic needs can be recomputed from this structure alone.
#[derive(Debug, Clone, PartialEq)]
pub struct ChainTrace {
    pub num_predictors: usize,
    pub burn_in: usize,
    pub words_per_config: usize,
    /// Bit-packed configuration after each iteration, t-major.
    pub configs: Vec<u64>,
    pub flip_accepted: Vec<bool>,
    pub swap_attempted: Vec<bool>,
    pub swap_accepted: Vec<bool>,
    /// Hamming distance across the composed iteration.
    pub hamming_jump: Vec<u8>,
    /// λ in force during each iteration.
    pub lambda: Vec<f64>,
    pub log_post: Vec<f64>,
    /// Evaluation problems encountered and survived (move rejected).
    pub diagnostics: Vec<String>,
}

impl ChainTrace {
    fn with_capacity(num_predictors: usize, burn_in: usize, capacity: usize) -> Self {
        ChainTrace {
            num_predictors,
            burn_in,
            words_per_config: num_predictors.div_ceil(64),
            configs: Vec::with_capacity(capacity * num_predictors.div_ceil(64)),
            flip_accepted: Vec::with_capacity(capacity),
            swap_attempted: Vec::with_capacity(capacity),
            swap_accepted: Vec::with_capacity(capacity),
            hamming_jump: Vec::with_capacity(capacity),
            lambda: Vec::with_capacity(capacity),
            log_post: Vec::with_capacity(capacity),
            diagnostics: Vec::new(),
        }
    }

    pub fn len(&self) -> usize {
        self.flip_accepted.len()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn config_at(&self, t: usize) -> InclusionVector {
        let w = self.words_per_config;
        InclusionVector::from_words(self.num_predictors, self.configs[t * w..(t + 1) * w].to_vec())
    }

    pub fn model_size_at(&self, t: usize) -> usize {
        self.config_at(t).popcount()
    }

    /// Flip acceptance rate over iterations [from, len).
    pub fn flip_acceptance_rate(&self, from: usize) -> f64 {
        let total = self.len() - from;
        if total == 0 {
            return 0.0;
        }
        self.flip_accepted[from..].iter().filter(|&&a| a).count() as f64 / total as f64
    }

    /// Swap acceptance rate over attempted swaps in [from, len); no-op
    /// iterations (empty swappable set) count as neither.
    pub fn swap_acceptance_rate(&self, from: usize) -> Option<f64> {
        let attempted = self.swap_attempted[from..].iter().filter(|&&a| a).count();
        if attempted == 0 {
            return None;
        }
        let accepted = self.swap_accepted[from..].iter().filter(|&&a| a).count();
        Some(accepted as f64 / attempted as f64)
    }

    fn push(
        &mut self,
        state: &InclusionVector,
        flip_acc: bool,
        swap_att: bool,
        swap_acc: bool,
        d_h: usize,
        lambda: f64,
        log_post: f64,
    ) {
        self.configs.extend_from_slice(state.words());
        self.flip_accepted.push(flip_acc);
        self.swap_attempted.push(swap_att);
        self.swap_accepted.push(swap_acc);
        self.hamming_jump.push(d_h as u8);
        self.lambda.push(lambda);
        self.log_post.push(log_post);
    }
}

/// Runs the chain against any model/dissimilarity pair (the linear problem
/// in production, lightweight doubles in tests).
pub fn run_chain_with<M, D>(
    model: &M,
    dissim: &D,
    graph: Option<&DependencyGraph>,
    config: &SamplerConfig,
) -> Result<ChainTrace>
where
    M: ModelPosterior,
    D: DissimilarityFn<M>,
{
    config.validate()?;
    if config.swap_enabled && graph.is_none() {
        return Err(CoreError::domain(
            "run_chain",
            "swap moves enabled but no dependency graph supplied",
        ));
    }
    let p = model.num_predictors();
    let mut state = match &config.initial_state {
        Some(s) => {
            if s.len() != p {
                return Err(CoreError::Dimension {
                    op: "run_chain",
                    expected: p,
                    got: s.len(),
                });
            }
            s.clone()
        }
        None => InclusionVector::empty(p),
    };

    let mut rng = chain_rng(config.seed, config.stream);
    let mut adapt_state = AdaptState::new(config.initial_lambda);
    let mut trace = ChainTrace::with_capacity(p, config.burn_in, config.total_iterations);

    for t in 1..=config.total_iterations {
        let lambda = adapt_state.lambda();
        let prev = state.clone();

        // (i) similarity-driven flip move.
        let mut flip_accepted = false;
        match build_proposal(model, &state, dissim, lambda) {
            Ok(proposal) => {
                let idx = proposal.sample_index(&mut rng);
                let candidate = proposal.neighborhood.members[idx].clone();
                let outcome = mh_accept_flip(model, &state, &candidate, dissim, lambda, &mut rng);
                if let Some(diag) = outcome.diagnostic {
                    trace.diagnostics.push(format!("iteration {t}: {diag}"));
                }
                flip_accepted = outcome.accepted;
                state = outcome.state;
            }
            Err(e) => {
                trace.diagnostics.push(format!("iteration {t}: flip proposal failed: {e}"));
            }
        }
        adapt_state.record_step(&config.adapt, t, flip_accepted);

        // (ii) optional graph-guided swap move.
        let mut swap_attempted = false;
        let mut swap_accepted = false;
        if config.swap_enabled {
            let graph = graph.expect("validated above");
            match build_swap_proposal(model, &state, graph, dissim, config.lambda_move) {
                Ok(Some(proposal)) => {
                    swap_attempted = true;
                    let idx = proposal.sample_index(&mut rng);
                    let outcome = mh_accept_swap(
                        model,
                        &state,
                        &proposal.candidates[idx],
                        graph,
                        dissim,
                        config.lambda_move,
                        &mut rng,
                    );
                    if let Some(diag) = outcome.diagnostic {
                        trace.diagnostics.push(format!("iteration {t}: {diag}"));
                    }
                    swap_accepted = outcome.accepted;
                    state = outcome.state;
                }
                Ok(None) => {}
                Err(e) => {
                    trace.diagnostics.push(format!("iteration {t}: swap proposal failed: {e}"));
                }
            }
        }

        let d_h = prev.hamming(&state)?;
        let log_post = model.log_posterior(&state)?;
        trace.push(&state, flip_accepted, swap_attempted, swap_accepted, d_h, lambda, log_post);
    }
    Ok(trace)
}

/// Runs the configured chain on a linear problem.
pub fn run_chain(
    problem: &LinearProblem,
    graph: Option<&DependencyGraph>,
    config: &SamplerConfig,
) -> Result<ChainTrace> {
    let kind = config.dissimilarity;
    run_chain_with(problem, &kind, graph, config)
}

/// Acceptance-vs-λ sweep: one non-adaptive, flip-only chain per λ value
/// (stream i of the master seed), returning the post-burn-in flip
/// acceptance rate for each.
pub fn lambda_sweep(
    problem: &LinearProblem,
    lambdas: &[f64],
    iterations: usize,
    burn_in: usize,
    dissimilarity: DissimKind,
    seed: RngSeed,
) -> Result<Vec<f64>> {
    let mut rates = Vec::with_capacity(lambdas.len());
    for (i, &lambda) in lambdas.iter().enumerate() {
        if !(lambda > 0.0) {
            return Err(CoreError::domain("lambda_sweep", format!("lambda = {lambda} must be positive")));
        }
        let config = SamplerConfig {
            total_iterations: iterations,
            burn_in,
            dissimilarity,
            initial_lambda: lambda,
            adapt: AdaptConfig::disabled(),
            swap_enabled: false,
            lambda_move: 1.25,
            initial_state: None,
            seed,
            stream: i as u64,
        };
        let trace = run_chain(problem, None, &config)?;
        rates.push(trace.flip_acceptance_rate(burn_in));
    }
    Ok(rates)
}
