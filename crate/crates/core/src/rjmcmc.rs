//! Reversible-jump MCMC for Dirichlet-Multinomial variable selection.
//!
//! Each iteration updates the intercept vector by an adaptively scaled
//! Gaussian random walk, then every category in turn: a flip of the
//! category's inclusion vector drawn from the similarity-driven categorical
//! proposal, with coefficients proposed from a Gaussian centered at the
//! penalized MLE with curvature covariance −H⁻¹. The acceptance ratio
//! combines the posterior ratio, the forward/reverse flip probabilities
//! (the reverse requires a second full proposal computation at the proposed
//! state) and the coefficient proposal densities, evaluated at the current
//! coefficients restricted to the current active set — never padded.
//! An optional graph-guided swap follows each category update.

use crate::adapt::{AdaptConfig, AdaptState, RwScaleAdapter};
use crate::conjlinear::P_VALUE_FLOOR;
use crate::dirmult::{
    dm_category_proposal_probs, dm_incremental_loglik, link_column, CategoryContext, DmData,
    DmParams, DmPriors, WarmStartMemory,
};
use crate::error::{CoreError, Result};
use crate::inclusion::InclusionVector;
use crate::localmove::{active_swappable_set, estimate_graph, DependencyGraph};
use crate::numcore::linalg::{cholesky, CholeskyFactor, SymmetricMatrix};
use crate::numcore::mvn::{mvn_logpdf_prec, mvn_sample, mvn_sample_prec};
use crate::numcore::rng::{chain_rng, ChainRng, Rng, RngSeed};
use crate::numcore::special::chi2_sf;
use crate::proposal::log_sum_exp;

const LN_2PI: f64 = 1.837_877_066_409_345_6;

/// Reversible-jump sampler configuration.
#[derive(Debug, Clone)]
pub struct RjConfig {
    pub iterations: usize,
    pub burn_in: usize,
    pub priors: DmPriors,
    /// Initial λ_j for every category.
    pub initial_lambda: f64,
    /// Per-category adaptation schedule.
    pub adapt: AdaptConfig,
    /// Initial intercept random-walk covariance Σ_β0 = scale · I.
    pub beta0_scale_init: f64,
    pub beta0_target_rate: f64,
    pub beta0_adapt_window: usize,
    /// Optional local swap step after each category update.
    pub local_move: bool,
    pub lambda_move: f64,
    /// Threshold for the covariate correlation graph used by swaps.
    pub graph_threshold: f64,
    pub warm_start_capacity: usize,
    pub seed: RngSeed,
    pub stream: u64,
}

impl RjConfig {
    pub fn new(iterations: usize, burn_in: usize, categories: usize, seed: RngSeed) -> Self {
        RjConfig {
            iterations,
            burn_in,
            priors: DmPriors::standard_defaults(categories),
            initial_lambda: 1.0,
            adapt: AdaptConfig::default_for(iterations),
            beta0_scale_init: 0.01,
            beta0_target_rate: RwScaleAdapter::DEFAULT_TARGET,
            beta0_adapt_window: 25,
            local_move: false,
            lambda_move: 1.25,
            graph_threshold: 0.5,
            warm_start_capacity: WarmStartMemory::DEFAULT_CAPACITY,
            seed,
            stream: 0,
        }
    }

    fn validate(&self, data: &DmData) -> Result<()> {
        if self.iterations == 0 || self.burn_in >= self.iterations {
            return Err(CoreError::domain(
                "RjConfig",
                format!("need burn_in < iterations, got {} / {}", self.burn_in, self.iterations),
            ));
        }
        self.priors.validate(data.categories())?;
        if !(self.initial_lambda > 0.0) || !(self.lambda_move > 0.0) {
            return Err(CoreError::domain("RjConfig", "lambda values must be positive"));
        }
        if !(self.beta0_scale_init > 0.0) {
            return Err(CoreError::domain("RjConfig", "beta0 proposal scale must be positive"));
        }
        self.adapt.validate(self.iterations)
    }
}

/// Per-iteration record of the reversible-jump chain.
#[derive(Debug, Clone)]
pub struct RjTrace {
    pub num_predictors: usize,
    pub categories: usize,
    pub burn_in: usize,
    /// ξ matrices packed with bit index j·P + p.
    pub words_per_config: usize,
    pub configs: Vec<u64>,
    /// T×J intercepts.
    pub beta0: Vec<f64>,
    /// Sparse active coefficients per iteration: (p, j, value).
    pub active_betas: Vec<Vec<(u16, u16, f64)>>,
    pub beta0_accepted: Vec<bool>,
    /// T×J per-category flip acceptances.
    pub cat_accepted: Vec<bool>,
    /// T×J swap attempt/acceptance flags (all false without local moves).
    pub swap_attempted: Vec<bool>,
    pub swap_accepted: Vec<bool>,
    /// T×J λ_j in force during the iteration.
    pub lambda: Vec<f64>,
    /// Total log joint posterior after the iteration.
    pub log_post: Vec<f64>,
    pub diagnostics: Vec<String>,
}

impl RjTrace {
    pub fn len(&self) -> usize {
        self.log_post.len()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// Posterior inclusion probability matrix, J rows by P columns.
    pub fn pip_matrix(&self, burn_in: usize) -> Result<Vec<Vec<f64>>> {
        let flat = crate::diagnostics::pip_from_packed(
            self.num_predictors * self.categories,
            self.words_per_config,
            &self.configs,
            burn_in,
        )?;
        Ok(flat
            .probabilities
            .chunks(self.num_predictors)
            .map(|c| c.to_vec())
            .collect())
    }

    /// Total active indicators at iteration t.
    pub fn model_size_at(&self, t: usize) -> usize {
        let w = self.words_per_config;
        self.configs[t * w..(t + 1) * w]
            .iter()
            .map(|v| v.count_ones() as usize)
            .sum()
    }

    pub fn config_at(&self, t: usize) -> InclusionVector {
        let w = self.words_per_config;
        InclusionVector::from_words(
            self.num_predictors * self.categories,
            self.configs[t * w..(t + 1) * w].to_vec(),
        )
    }
}

/// Gaussian log-density with variance `var`, constants included (they carry
/// the dimension dependence of trans-dimensional ratios).
#[inline]
fn log_normal_pdf(x: f64, var: f64) -> f64 {
    -0.5 * (LN_2PI + var.ln()) - 0.5 * x * x / var
}

/// Log prior of one inclusion indicator under the Beta-Binomial.
#[inline]
fn log_beta_binom(active: bool, a: f64, b: f64) -> f64 {
    if active {
        (a / (a + b)).ln()
    } else {
        (b / (a + b)).ln()
    }
}

/// Full log joint posterior: likelihood plus intercept, coefficient and
/// inclusion priors, up to constants independent of all sampled quantities.
pub fn log_joint_posterior(data: &DmData, params: &DmParams, priors: &DmPriors) -> Result<f64> {
    priors.validate(data.categories())?;
    let mut lp = params.loglik();
    for (j, &b0) in params.beta0().iter().enumerate() {
        lp += log_normal_pdf(b0, priors.s2[j]);
    }
    for j in 0..data.categories() {
        for p in params.xi(j).active_indices() {
            lp += log_normal_pdf(params.beta(j)[p], priors.r2[j]);
        }
        for p in 0..data.num_predictors() {
            lp += log_beta_binom(params.xi(j).get(p), priors.a, priors.b);
        }
    }
    Ok(lp)
}

/// Cholesky of −H with escalating diagonal regularization: near-singular
/// curvature gets 1e-6·I growing tenfold up to 1·I before giving up.
fn chol_neg_hessian(hessian: &SymmetricMatrix) -> Result<CholeskyFactor> {
    let k = hessian.dim();
    let mut neg = SymmetricMatrix::zeros(k);
    for a in 0..k {
        for b in a..k {
            neg.set(a, b, -hessian.get(a, b));
        }
    }
    match cholesky(&neg) {
        Ok(c) => return Ok(c),
        Err(_) => {
            let mut ridge = 1e-6;
            while ridge <= 1.0 {
                let mut reg = neg.clone();
                reg.add_diagonal(ridge);
                if let Ok(c) = cholesky(&reg) {
                    return Ok(c);
                }
                ridge *= 10.0;
            }
        }
    }
    Err(CoreError::eval(
        "chol_neg_hessian",
        "proposal curvature not negative definite even after regularization",
    ))
}

/// Outcome of one intercept update.
pub struct Beta0Outcome {
    pub accepted: bool,
    pub log_alpha: f64,
}

/// Step 1: joint Gaussian random walk on β₀ with a symmetric proposal, so
/// the acceptance ratio is the posterior ratio alone.
pub fn update_beta0(
    data: &DmData,
    params: &mut DmParams,
    priors: &DmPriors,
    scale_chol: &CholeskyFactor,
    rng: &mut ChainRng,
) -> Result<Beta0Outcome> {
    let current = params.beta0().to_vec();
    let proposal = mvn_sample(&current, scale_chol, rng)?;

    // Candidate likelihood without touching the caches.
    let cats = data.categories();
    let mut cand_loglik = 0.0;
    {
        use crate::dirmult::ETA_CLAMP;
        use crate::numcore::special::lgamma_raw;
        let shift: Vec<f64> = proposal.iter().zip(&current).map(|(p, c)| p - c).collect();
        for i in 0..data.n() {
            let y_tot = data.row_total(i);
            let mut row_sum = 0.0;
            let mut terms = 0.0;
            for j in 0..cats {
                let eta = params.eta_at(i, j) + shift[j];
                let g = eta.clamp(-ETA_CLAMP, ETA_CLAMP).exp();
                row_sum += g;
                let y = data.count(i, j);
                terms += -lgamma_raw(g) - lgamma_raw(y + 1.0) + lgamma_raw(y + g);
            }
            cand_loglik += lgamma_raw(y_tot + 1.0) + lgamma_raw(row_sum)
                - lgamma_raw(y_tot + row_sum)
                + terms;
        }
    }
    let mut log_alpha = cand_loglik - params.loglik();
    for j in 0..cats {
        log_alpha += log_normal_pdf(proposal[j], priors.s2[j]) - log_normal_pdf(current[j], priors.s2[j]);
    }
    let u: f64 = rng.random();
    let accepted = u.ln() < log_alpha;
    if accepted {
        params.apply_beta0(data, proposal);
    }
    Ok(Beta0Outcome { accepted, log_alpha })
}

/// Outcome of one category update.
pub struct CategoryOutcome {
    pub accepted: bool,
    pub log_alpha: f64,
    pub warnings: Vec<String>,
}

/// Cache of whole proposal vectors keyed by origin configuration, valid as
/// long as the category's conditioning (intercepts plus the other
/// categories) is unchanged. With typical acceptance rates the conditioning
/// survives many iterations, so most forward and reverse proposal
/// computations — P PMLE fits each — can be reused verbatim.
pub struct ProposalCache {
    versions: Vec<Vec<u64>>,
    maps: Vec<std::collections::HashMap<InclusionVector, std::rc::Rc<crate::dirmult::CategoryProposal>>>,
}

const PROPOSAL_CACHE_CAPACITY: usize = 256;

impl ProposalCache {
    pub fn new(categories: usize) -> Self {
        ProposalCache {
            versions: vec![Vec::new(); categories],
            maps: (0..categories).map(|_| std::collections::HashMap::new()).collect(),
        }
    }

    /// The conditioning signature for category j: every version counter
    /// except the category's own, plus the λ_j in force (adaptation moves
    /// it at window boundaries, invalidating the weights).
    fn signature(j: usize, versions: &[u64], lambda_j: f64) -> Vec<u64> {
        let mut sig = versions.to_vec();
        sig[1 + j] = 0;
        sig.push(lambda_j.to_bits());
        sig
    }

    fn get_or_compute(
        &mut self,
        j: usize,
        versions: &[u64],
        lambda_j: f64,
        origin: &InclusionVector,
        compute: impl FnOnce() -> Result<crate::dirmult::CategoryProposal>,
    ) -> Result<(std::rc::Rc<crate::dirmult::CategoryProposal>, bool)> {
        let sig = Self::signature(j, versions, lambda_j);
        if self.versions[j] != sig {
            self.maps[j].clear();
            self.versions[j] = sig;
        }
        if let Some(hit) = self.maps[j].get(origin) {
            return Ok((hit.clone(), false));
        }
        let computed = std::rc::Rc::new(compute()?);
        if self.maps[j].len() < PROPOSAL_CACHE_CAPACITY {
            self.maps[j].insert(origin.clone(), computed.clone());
        }
        Ok((computed, true))
    }
}

/// Step 2 for one category: flip proposal, PMLE-centered coefficient
/// proposal, and the reversible-jump acceptance ratio.
#[allow(clippy::too_many_arguments)]
pub fn update_category(
    data: &DmData,
    params: &mut DmParams,
    priors: &DmPriors,
    j: usize,
    lambda_j: f64,
    memory: &mut WarmStartMemory,
    rng: &mut ChainRng,
) -> Result<CategoryOutcome> {
    let mut cache = ProposalCache::new(data.categories());
    let versions = vec![0u64; data.categories() + 1];
    update_category_cached(
        data, params, priors, j, lambda_j, memory, &mut cache, &versions, rng,
    )
}

/// The same update with proposal-vector reuse across iterations whose
/// conditioning is unchanged.
#[allow(clippy::too_many_arguments)]
pub fn update_category_cached(
    data: &DmData,
    params: &mut DmParams,
    priors: &DmPriors,
    j: usize,
    lambda_j: f64,
    memory: &mut WarmStartMemory,
    cache: &mut ProposalCache,
    versions: &[u64],
    rng: &mut ChainRng,
) -> Result<CategoryOutcome> {
    let mut warnings = Vec::new();

    // (i) forward flip proposal and candidate draw.
    let (forward, fwd_fresh) = cache.get_or_compute(j, versions, lambda_j, &params.xi(j).clone(), || {
        dm_category_proposal_probs(data, params, j, priors, lambda_j, &params.xi(j).clone(), memory)
    })?;
    if fwd_fresh {
        warnings.extend(forward.warnings.iter().cloned());
    }
    let flip = forward.sample_index(rng);
    let candidate = &forward.candidates[flip];
    let xi_new = candidate.xi.clone();
    let active_new = candidate.active.clone();

    let ctx = CategoryContext::new(data, params, j, priors);

    // (ii) coefficient proposal from the local curvature at the PMLE.
    let (beta_new, log_fwd_gauss) = if active_new.is_empty() {
        (Vec::new(), 0.0)
    } else {
        let hess = ctx.hessian(&active_new, &candidate.beta_hat);
        let chol = match chol_neg_hessian(&hess) {
            Ok(c) => c,
            Err(e) => {
                warnings.push(format!("category {j}: {e}; move aborted"));
                return Ok(CategoryOutcome {
                    accepted: false,
                    log_alpha: f64::NEG_INFINITY,
                    warnings,
                });
            }
        };
        let draw = mvn_sample_prec(&candidate.beta_hat, &chol, rng)?;
        let lp = mvn_logpdf_prec(&draw, &candidate.beta_hat, &chol)?;
        (draw, lp)
    };

    let (gamma_col, eta_col) = link_column(data, params.beta0()[j], &active_new, &beta_new);
    let (loglik_new, _, _) = dm_incremental_loglik(data, params, j, &gamma_col)?;

    // (iii) reverse ingredients: the full proposal at the proposed state and
    // the PMLE of the current active set (its return-flip candidate).
    let (reverse, rev_fresh) = cache.get_or_compute(j, versions, lambda_j, &xi_new, || {
        dm_category_proposal_probs(data, params, j, priors, lambda_j, &xi_new, memory)
    })?;
    if rev_fresh {
        warnings.extend(reverse.warnings.iter().cloned());
    }
    let return_candidate = &reverse.candidates[flip];
    debug_assert_eq!(&return_candidate.xi, params.xi(j));

    let active_curr = params.xi(j).active_indices();
    let beta_curr: Vec<f64> = active_curr.iter().map(|&p| params.beta(j)[p]).collect();
    let log_rev_gauss = if active_curr.is_empty() {
        0.0
    } else {
        let hess_curr = ctx.hessian(&active_curr, &return_candidate.beta_hat);
        let chol_curr = match chol_neg_hessian(&hess_curr) {
            Ok(c) => c,
            Err(e) => {
                warnings.push(format!("category {j}: reverse curvature failed ({e}); move aborted"));
                return Ok(CategoryOutcome {
                    accepted: false,
                    log_alpha: f64::NEG_INFINITY,
                    warnings,
                });
            }
        };
        mvn_logpdf_prec(&beta_curr, &return_candidate.beta_hat, &chol_curr)?
    };

    // (iv) priors: coefficient densities on each side's active set plus the
    // flipped indicator's Beta-Binomial term.
    let mut log_prior_delta = 0.0;
    for &b in &beta_new {
        log_prior_delta += log_normal_pdf(b, priors.r2[j]);
    }
    for &b in &beta_curr {
        log_prior_delta -= log_normal_pdf(b, priors.r2[j]);
    }
    log_prior_delta += log_beta_binom(xi_new.get(flip), priors.a, priors.b)
        - log_beta_binom(params.xi(j).get(flip), priors.a, priors.b);

    let log_alpha = (loglik_new - params.loglik())
        + log_prior_delta
        + (reverse.log_probs[flip] - forward.log_probs[flip])
        + (log_rev_gauss - log_fwd_gauss);

    let u: f64 = rng.random();
    let accepted = u.ln() < log_alpha;
    if accepted {
        let mut beta_full = vec![0.0; data.num_predictors()];
        for (idx, &p) in active_new.iter().enumerate() {
            beta_full[p] = beta_new[idx];
        }
        if let Some(drift) =
            params.apply_category(data, j, beta_full, xi_new, &gamma_col, &eta_col, loglik_new)
        {
            warnings.push(drift);
        }
    }
    Ok(CategoryOutcome {
        accepted,
        log_alpha,
        warnings,
    })
}

/// One scored swap candidate for the DM local move.
struct DmSwapCandidate {
    deactivate: usize,
    activate: usize,
    xi: InclusionVector,
    active: Vec<usize>,
    beta_hat: Vec<f64>,
}

struct DmSwapProposal {
    candidates: Vec<DmSwapCandidate>,
    log_probs: Vec<f64>,
    probabilities: Vec<f64>,
    warnings: Vec<String>,
}

impl DmSwapProposal {
    fn sample_index(&self, rng: &mut ChainRng) -> usize {
        let u: f64 = rng.random();
        let mut cum = 0.0;
        for (i, p) in self.probabilities.iter().enumerate() {
            cum += p;
            if cum > u {
                return i;
            }
        }
        self.probabilities.len() - 1
    }

    fn log_prob_of(&self, deactivate: usize, activate: usize) -> Option<f64> {
        self.candidates
            .iter()
            .position(|c| c.deactivate == deactivate && c.activate == activate)
            .map(|i| self.log_probs[i])
    }
}

/// Swap distribution for one category: uniform over active components with
/// an inactive neighbor, similarity-weighted over those neighbors with the
/// LR-based dissimilarity at exponent λ_move.
#[allow(clippy::too_many_arguments)]
fn build_dm_swap_proposal(
    data: &DmData,
    params: &DmParams,
    j: usize,
    priors: &DmPriors,
    lambda_move: f64,
    graph: &DependencyGraph,
    origin: &InclusionVector,
    memory: &mut WarmStartMemory,
) -> Result<Option<DmSwapProposal>> {
    let swappable = active_swappable_set(origin, graph);
    if swappable.is_empty() {
        return Ok(None);
    }
    let ctx = CategoryContext::new(data, params, j, priors);
    let gamma0 = params.beta0()[j].clamp(-crate::dirmult::ETA_CLAMP, crate::dirmult::ETA_CLAMP).exp();
    let slice_baseline = ctx.column_loglik_slice(std::iter::repeat(gamma0).take(data.n()));
    let log_uniform = -(swappable.len() as f64).ln();
    let mut candidates = Vec::new();
    let mut log_probs = Vec::new();
    let mut warnings = Vec::new();
    for &p in &swappable {
        let inactive: Vec<usize> = graph
            .neighbors(p)
            .iter()
            .copied()
            .filter(|&q| !origin.get(q))
            .collect();
        let mut group = Vec::with_capacity(inactive.len());
        for &q in &inactive {
            let xi_cand = origin.swapped(p, q);
            let active = xi_cand.active_indices();
            let start: Vec<f64> = match memory.get(j, &xi_cand) {
                Some(w) if w.len() == active.len() => w,
                _ => active.iter().map(|&r| params.beta(j)[r]).collect(),
            };
            let (beta_hat, objective, failed) =
                match crate::dirmult::pmle_maximize(&ctx, &active, &start) {
                    Ok(fit) => (fit.beta_hat, fit.objective, false),
                    Err(CoreError::NonConvergence { best, best_objective, grad_norm, .. }) => {
                        warnings.push(format!(
                            "category {j}: swap PMLE ({p} → {q}) did not converge (grad norm {grad_norm:.2e})"
                        ));
                        (best, best_objective, true)
                    }
                    Err(e) => return Err(e),
                };
            let slice_cand = ctx.column_slice_from_objective(active.len(), &beta_hat, objective);
            let lr = if failed { 0.0 } else { (2.0 * (slice_cand - slice_baseline)).max(0.0) };
            let p_value = chi2_sf(lr, active.len().max(1) as u32)?;
            let d10 = -(p_value.max(P_VALUE_FLOOR).log10());
            group.push(d10.powf(lambda_move));
            if !failed {
                memory.insert(j, xi_cand.clone(), beta_hat.clone());
            }
            candidates.push(DmSwapCandidate {
                deactivate: p,
                activate: q,
                xi: xi_cand,
                active,
                beta_hat,
            });
        }
        let norm = log_sum_exp(&group);
        for w in group {
            log_probs.push(log_uniform + w - norm);
        }
    }
    let probabilities: Vec<f64> = log_probs.iter().map(|lp| lp.exp()).collect();
    Ok(Some(DmSwapProposal {
        candidates,
        log_probs,
        probabilities,
        warnings,
    }))
}

/// Local move: a size-preserving swap with PMLE-centered
/// coefficient redraw, accepted under the full reversible ratio. Returns
/// None when no component can swap.
#[allow(clippy::too_many_arguments)]
fn local_move_category(
    data: &DmData,
    params: &mut DmParams,
    priors: &DmPriors,
    j: usize,
    lambda_move: f64,
    graph: &DependencyGraph,
    memory: &mut WarmStartMemory,
    rng: &mut ChainRng,
) -> Result<Option<CategoryOutcome>> {
    let origin = params.xi(j).clone();
    let Some(forward) = build_dm_swap_proposal(
        data, params, j, priors, lambda_move, graph, &origin, memory,
    )?
    else {
        return Ok(None);
    };
    let mut warnings = forward.warnings.clone();
    let idx = forward.sample_index(rng);
    let cand = &forward.candidates[idx];
    let log_q_fwd = forward.log_probs[idx];

    let ctx = CategoryContext::new(data, params, j, priors);
    let hess = ctx.hessian(&cand.active, &cand.beta_hat);
    let chol = match chol_neg_hessian(&hess) {
        Ok(c) => c,
        Err(e) => {
            warnings.push(format!("category {j}: swap curvature failed ({e}); move aborted"));
            return Ok(Some(CategoryOutcome {
                accepted: false,
                log_alpha: f64::NEG_INFINITY,
                warnings,
            }));
        }
    };
    let beta_new = mvn_sample_prec(&cand.beta_hat, &chol, rng)?;
    let log_fwd_gauss = mvn_logpdf_prec(&beta_new, &cand.beta_hat, &chol)?;
    let (gamma_col, eta_col) = link_column(data, params.beta0()[j], &cand.active, &beta_new);
    let (loglik_new, _, _) = dm_incremental_loglik(data, params, j, &gamma_col)?;

    // Reverse: swap distribution at the proposed state; the return swap
    // deactivates the newly activated component.
    let reverse = build_dm_swap_proposal(
        data, params, j, priors, lambda_move, graph, &cand.xi, memory,
    )?
    .expect("newly activated component always has the deactivated one as inactive neighbor");
    warnings.extend(reverse.warnings.iter().cloned());
    let log_q_rev = reverse
        .log_prob_of(cand.activate, cand.deactivate)
        .expect("symmetric adjacency guarantees the return swap");
    let return_cand = reverse
        .candidates
        .iter()
        .find(|c| c.deactivate == cand.activate && c.activate == cand.deactivate)
        .expect("return swap candidate");
    debug_assert_eq!(&return_cand.xi, &origin);

    let active_curr = origin.active_indices();
    let beta_curr: Vec<f64> = active_curr.iter().map(|&p| params.beta(j)[p]).collect();
    let hess_curr = ctx.hessian(&active_curr, &return_cand.beta_hat);
    let chol_curr = match chol_neg_hessian(&hess_curr) {
        Ok(c) => c,
        Err(e) => {
            warnings.push(format!("category {j}: reverse swap curvature failed ({e}); move aborted"));
            return Ok(Some(CategoryOutcome {
                accepted: false,
                log_alpha: f64::NEG_INFINITY,
                warnings,
            }));
        }
    };
    let log_rev_gauss = mvn_logpdf_prec(&beta_curr, &return_cand.beta_hat, &chol_curr)?;

    // Model size is preserved, so the Beta-Binomial terms cancel exactly;
    // only the coefficient densities differ.
    let mut log_prior_delta = 0.0;
    for &b in &beta_new {
        log_prior_delta += log_normal_pdf(b, priors.r2[j]);
    }
    for &b in &beta_curr {
        log_prior_delta -= log_normal_pdf(b, priors.r2[j]);
    }

    let log_alpha = (loglik_new - params.loglik())
        + log_prior_delta
        + (log_q_rev - log_q_fwd)
        + (log_rev_gauss - log_fwd_gauss);
    let u: f64 = rng.random();
    let accepted = u.ln() < log_alpha;
    if accepted {
        let mut beta_full = vec![0.0; data.num_predictors()];
        for (i, &p) in cand.active.iter().enumerate() {
            beta_full[p] = beta_new[i];
        }
        if let Some(drift) = params.apply_category(
            data,
            j,
            beta_full,
            cand.xi.clone(),
            &gamma_col,
            &eta_col,
            loglik_new,
        ) {
            warnings.push(drift);
        }
    }
    Ok(Some(CategoryOutcome {
        accepted,
        log_alpha,
        warnings,
    }))
}

/// Runs the full reversible-jump chain.
pub fn run_rjmcmc(data: &DmData, config: &RjConfig) -> Result<RjTrace> {
    config.validate(data)?;
    let n = data.n();
    let p = data.num_predictors();
    let cats = data.categories();

    // Method-of-moments intercepts: log mean category proportions.
    let mut totals = vec![0.0f64; cats];
    let mut grand = 0.0f64;
    for i in 0..n {
        for (j, t) in totals.iter_mut().enumerate() {
            *t += data.count(i, j);
        }
        grand += data.row_total(i);
    }
    let beta0_init: Vec<f64> = totals
        .iter()
        .map(|&t| ((t + 0.5) / (grand + 0.5 * cats as f64)).ln())
        .collect();
    let mut params = DmParams::baseline(data, beta0_init)?;

    let graph = if config.local_move {
        let (g, warnings) = estimate_graph(data.design(), config.graph_threshold)?;
        if !warnings.is_empty() {
            // surfaced in the trace diagnostics below
        }
        Some((g, warnings))
    } else {
        None
    };

    let mut sigma_beta0 = SymmetricMatrix::scaled_identity(cats, config.beta0_scale_init);
    let mut scale_adapter = RwScaleAdapter::new(1.0, 0.75, config.beta0_target_rate);
    let mut adapt_states: Vec<AdaptState> =
        (0..cats).map(|_| AdaptState::new(config.initial_lambda)).collect();
    let mut memory = WarmStartMemory::new(cats, config.warm_start_capacity);
    let mut qcache = ProposalCache::new(cats);
    // Version counters: slot 0 for the intercepts, 1 + j per category.
    let mut versions = vec![0u64; cats + 1];
    let mut rng = chain_rng(config.seed, config.stream);

    let words = (p * cats).div_ceil(64);
    let mut trace = RjTrace {
        num_predictors: p,
        categories: cats,
        burn_in: config.burn_in,
        words_per_config: words,
        configs: Vec::with_capacity(config.iterations * words),
        beta0: Vec::with_capacity(config.iterations * cats),
        active_betas: Vec::with_capacity(config.iterations),
        beta0_accepted: Vec::with_capacity(config.iterations),
        cat_accepted: Vec::with_capacity(config.iterations * cats),
        swap_attempted: Vec::with_capacity(config.iterations * cats),
        swap_accepted: Vec::with_capacity(config.iterations * cats),
        lambda: Vec::with_capacity(config.iterations * cats),
        log_post: Vec::with_capacity(config.iterations),
        diagnostics: Vec::new(),
    };
    if let Some((_, warnings)) = &graph {
        for w in warnings {
            trace.diagnostics.push(format!("graph estimation: {w}"));
        }
    }

    let mut beta0_window_acc = 0usize;

    for t in 1..=config.iterations {
        // Step 1: intercept random walk with burn-in scale adaptation.
        let scale_chol = cholesky(&sigma_beta0).map_err(|e| {
            CoreError::eval("run_rjmcmc", format!("beta0 proposal scale lost positive definiteness: {e}"))
        })?;
        let b0_out = update_beta0(data, &mut params, &config.priors, &scale_chol, &mut rng)?;
        if b0_out.accepted {
            versions[0] += 1;
        }
        trace.beta0_accepted.push(b0_out.accepted);
        beta0_window_acc += usize::from(b0_out.accepted);
        if t <= config.burn_in {
            if t % config.beta0_adapt_window == 0 {
                let rate = beta0_window_acc as f64 / config.beta0_adapt_window as f64;
                scale_adapter.record_window(&mut sigma_beta0, rate);
                beta0_window_acc = 0;
            }
        } else if !scale_adapter.is_frozen() {
            scale_adapter.freeze();
        }

        // Step 2: sequential category updates (with optional local swap).
        for j in 0..cats {
            let lambda_j = adapt_states[j].lambda();
            trace.lambda.push(lambda_j);
            let outcome = update_category_cached(
                data,
                &mut params,
                &config.priors,
                j,
                lambda_j,
                &mut memory,
                &mut qcache,
                &versions,
                &mut rng,
            )?;
            if outcome.accepted {
                versions[1 + j] += 1;
            }
            for w in outcome.warnings {
                trace.diagnostics.push(format!("iteration {t}: {w}"));
            }
            trace.cat_accepted.push(outcome.accepted);
            adapt_states[j].record_step(&config.adapt, t, outcome.accepted);

            let mut attempted = false;
            let mut accepted = false;
            if let Some((g, _)) = &graph {
                match local_move_category(
                    data,
                    &mut params,
                    &config.priors,
                    j,
                    config.lambda_move,
                    g,
                    &mut memory,
                    &mut rng,
                )? {
                    Some(out) => {
                        attempted = true;
                        accepted = out.accepted;
                        if out.accepted {
                            versions[1 + j] += 1;
                        }
                        for w in out.warnings {
                            trace.diagnostics.push(format!("iteration {t}: {w}"));
                        }
                    }
                    None => {}
                }
            }
            trace.swap_attempted.push(attempted);
            trace.swap_accepted.push(accepted);
        }

        // Record the iteration.
        let mut packed = vec![0u64; words];
        for j in 0..cats {
            for q in params.xi(j).active_indices() {
                let bit = j * p + q;
                packed[bit / 64] |= 1 << (bit % 64);
            }
        }
        trace.configs.extend_from_slice(&packed);
        trace.beta0.extend_from_slice(params.beta0());
        trace.active_betas.push(params.active_triplets());
        let log_post = log_joint_posterior(data, &params, &config.priors)?;
        trace.log_post.push(log_post);

        // Posterior cache checkpoint: full recomputation every 1000
        // iterations must agree with the cached evaluation.
        if t % 1000 == 0 {
            let fresh = DmParams::new(
                data,
                params.beta0().to_vec(),
                (0..cats).map(|j| params.beta(j).to_vec()).collect(),
                (0..cats).map(|j| params.xi(j).clone()).collect(),
            )?;
            let fresh_post = log_joint_posterior(data, &fresh, &config.priors)?;
            if (fresh_post - log_post).abs() > 1e-8 * (1.0 + fresh_post.abs()) {
                trace.diagnostics.push(format!(
                    "iteration {t}: checkpoint divergence {:.3e} between cached and recomputed log posterior",
                    (fresh_post - log_post).abs()
                ));
            }
        }
    }

    // Dimension bookkeeping invariant: stored nonzero coefficients match the
    // inclusion counts exactly.
    for j in 0..cats {
        let nonzero = params.beta(j).iter().filter(|&&b| b != 0.0).count();
        if nonzero > params.xi(j).popcount() {
            trace.diagnostics.push(format!(
                "category {j}: {nonzero} stored coefficients exceed popcount {}",
                params.xi(j).popcount()
            ));
        }
    }
    Ok(trace)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::synthgen::{gen_dm, DmSynthConfig};

    fn toy() -> (DmData, RjConfig) {
        let mut config = DmSynthConfig::defaults(20, 4, 3, RngSeed(31));
        config.depth_base = 60;
        config.depth_mean = 25.0;
        config.associations = vec![(0, 1, 1.2)];
        let gen = gen_dm(&config).unwrap();
        let data = DmData::new(&gen.counts, gen.x).unwrap();
        let mut rj = RjConfig::new(40, 10, 3, RngSeed(7));
        rj.adapt = AdaptConfig {
            t_start: 1,
            t_end: 30,
            ..AdaptConfig::default_for(40)
        };
        (data, rj)
    }

    #[test]
    fn symmetric_beta_binomial_prior_is_half() {
        assert!((log_beta_binom(true, 2.0, 2.0) - 0.5f64.ln()).abs() < 1e-15);
        assert!((log_beta_binom(false, 2.0, 2.0) - 0.5f64.ln()).abs() < 1e-15);
    }

    #[test]
    fn standard_hyperparameters_give_tenth_inclusion() {
        assert!((log_beta_binom(true, 1.0, 9.0) - 0.1f64.ln()).abs() < 1e-15);
    }

    #[test]
    fn joint_posterior_matches_term_by_term_oracle() {
        let (data, config) = toy();
        let mut xi: Vec<InclusionVector> = (0..3).map(|_| InclusionVector::empty(4)).collect();
        xi[1].set(0, true);
        let mut beta = vec![vec![0.0; 4]; 3];
        beta[1][0] = 0.7;
        let params = DmParams::new(&data, vec![0.2, -0.1, 0.0], beta, xi).unwrap();
        let lp = log_joint_posterior(&data, &params, &config.priors).unwrap();
        // Direct term-by-term accumulation.
        let mut oracle = params.loglik();
        for &b0 in params.beta0() {
            oracle += -0.5 * (LN_2PI + 10f64.ln()) - b0 * b0 / 20.0;
        }
        oracle += -0.5 * (LN_2PI + 10f64.ln()) - 0.7 * 0.7 / 20.0;
        let p_in = (1.0f64 / 10.0).ln();
        let p_out = (9.0f64 / 10.0).ln();
        oracle += p_in + 11.0 * p_out;
        assert!((lp - oracle).abs() < 1e-10, "{lp} vs {oracle}");
    }

    #[test]
    fn single_iteration_runs_and_records() {
        let (data, mut config) = toy();
        config.iterations = 1;
        config.burn_in = 0;
        config.adapt = AdaptConfig::disabled();
        let trace = run_rjmcmc(&data, &config).unwrap();
        assert_eq!(trace.len(), 1);
        assert_eq!(trace.beta0.len(), 3);
        assert_eq!(trace.cat_accepted.len(), 3);
    }

    #[test]
    fn identical_seeds_give_bit_identical_traces() {
        let (data, config) = toy();
        let a = run_rjmcmc(&data, &config).unwrap();
        let b = run_rjmcmc(&data, &config).unwrap();
        assert_eq!(a.configs, b.configs);
        assert_eq!(a.cat_accepted, b.cat_accepted);
        let bits = |v: &[f64]| v.iter().map(|x| x.to_bits()).collect::<Vec<_>>();
        assert_eq!(bits(&a.beta0), bits(&b.beta0));
        assert_eq!(bits(&a.log_post), bits(&b.log_post));
        assert_eq!(bits(&a.lambda), bits(&b.lambda));
    }

    #[test]
    fn dimension_bookkeeping_holds_along_the_chain() {
        let (data, mut config) = toy();
        config.iterations = 120;
        config.burn_in = 30;
        let trace = run_rjmcmc(&data, &config).unwrap();
        for t in 0..trace.len() {
            let stored: usize = trace.active_betas[t].len();
            assert_eq!(stored, trace.model_size_at(t));
            for &(p, j, v) in &trace.active_betas[t] {
                assert!(v.is_finite());
                let bit = (j as usize) * 4 + p as usize;
                assert!(trace.config_at(t).get(bit));
            }
        }
        assert!(trace.diagnostics.iter().all(|d| !d.contains("divergence")), "{:?}", trace.diagnostics);
    }

    #[test]
    fn local_move_variant_runs_and_preserves_validity() {
        let (data, mut config) = toy();
        config.iterations = 60;
        config.burn_in = 20;
        config.local_move = true;
        config.graph_threshold = 0.1;
        let trace = run_rjmcmc(&data, &config).unwrap();
        assert_eq!(trace.swap_attempted.len(), 60 * 3);
        // Log posterior recomputable at the final state.
        assert!(trace.log_post.iter().all(|lp| lp.is_finite()));
    }

    #[test]
    fn beta0_zero_variance_proposal_always_accepts() {
        let (data, config) = toy();
        let mut params = DmParams::baseline(&data, vec![0.0; 3]).unwrap();
        // Degenerate scale: essentially zero variance, proposal ≈ current.
        let sigma = SymmetricMatrix::scaled_identity(3, 1e-30);
        let chol = cholesky(&sigma).unwrap();
        let mut rng = chain_rng(RngSeed(3), 0);
        for _ in 0..20 {
            let out = update_beta0(&data, &mut params, &config.priors, &chol, &mut rng).unwrap();
            assert!(out.accepted, "log_alpha = {}", out.log_alpha);
            assert!(out.log_alpha.abs() < 1e-6);
        }
    }
}
