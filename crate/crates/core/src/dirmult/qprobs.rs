//! Similarity-driven categorical flip proposal for one DM category.
//!
//! Each of the P single-flip candidates of the origin configuration is
//! scored by refitting its coefficients (PMLE) and forming the
//! likelihood-ratio statistic of the refitted column against the
//! category's covariate-free baseline column, holding the intercepts and
//! every other category at their current values. Terms not involving the
//! category cancel exactly in that difference, so the statistic stays
//! well-scaled no matter how well the rest of the model already fits, and
//! the set-emptying flip lands on LR = 0 (p-value 1) identically. Weights
//! [−log10 p]^λ are normalized by log-sum-exp into the proposal vector.

use crate::conjlinear::P_VALUE_FLOOR;
use crate::error::Result;
use crate::inclusion::InclusionVector;
use crate::numcore::special::chi2_sf;
use crate::proposal::log_sum_exp;

use super::pmle::{maximize, CategoryContext, WarmStartMemory};
use super::{DmData, DmParams, DmPriors};

/// Scored flip candidate: everything the reversible-jump update reuses.
#[derive(Debug, Clone)]
pub struct CandidateFit {
    /// Flipped predictor index.
    pub flip: usize,
    pub xi: InclusionVector,
    pub active: Vec<usize>,
    /// PMLE over the candidate active set (empty when the set is empty).
    pub beta_hat: Vec<f64>,
    /// Penalized objective at the PMLE.
    pub objective: f64,
    /// Full-model log-likelihood with the refitted column in place.
    pub loglik_at_fit: f64,
    /// LR statistic against the baseline, clamped at 0.
    pub lr: f64,
    pub p_value: f64,
    /// True when the optimizer failed; the candidate got the minimal weight.
    pub failed: bool,
}

/// The normalized categorical proposal q_j over flip positions.
#[derive(Debug, Clone)]
pub struct CategoryProposal {
    pub origin: InclusionVector,
    pub candidates: Vec<CandidateFit>,
    /// (−log10 p)^λ per candidate.
    pub log_weights: Vec<f64>,
    pub log_normalizer: f64,
    pub log_probs: Vec<f64>,
    pub probabilities: Vec<f64>,
    /// Warnings for candidates whose PMLE did not converge.
    pub warnings: Vec<String>,
}

impl CategoryProposal {
    pub fn sample_index(&self, rng: &mut crate::numcore::rng::ChainRng) -> usize {
        use crate::numcore::rng::Rng;
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
}

/// Builds q_j for flips of `origin`, conditioning on the current intercepts
/// and the other categories held inside `params`. The candidate likelihoods
/// replace column j outright, so the result does not depend on the current
/// column — the same call therefore serves the forward proposal
/// (origin = current ξ_j) and the reverse one (origin = proposed ξ_j′).
///
/// `memory` supplies and collects warm starts keyed by the candidate
/// active sets.
pub fn dm_category_proposal_probs(
    data: &DmData,
    params: &DmParams,
    j: usize,
    priors: &DmPriors,
    lambda_j: f64,
    origin: &InclusionVector,
    memory: &mut WarmStartMemory,
) -> Result<CategoryProposal> {
    let p = data.num_predictors();
    debug_assert_eq!(origin.len(), p);
    let ctx = CategoryContext::new(data, params, j, priors);
    // Shared across candidates: the current column's likelihood slice (for
    // the candidates' full likelihoods) and the baseline column's slice
    // (the reference the LR statistics compare against).
    let slice_current = ctx.current_column_slice(params);
    let gamma0 = params.beta0()[j].clamp(-super::ETA_CLAMP, super::ETA_CLAMP).exp();
    let slice_baseline = ctx.column_loglik_slice(std::iter::repeat(gamma0).take(data.n()));
    let mut candidates = Vec::with_capacity(p);
    let mut log_weights = Vec::with_capacity(p);
    let mut warnings = Vec::new();

    for flip in 0..p {
        let xi_cand = origin.flipped(flip);
        let active = xi_cand.active_indices();

        let start: Vec<f64> = match memory.get(j, &xi_cand) {
            Some(w) if w.len() == active.len() => w,
            _ => active.iter().map(|&q| params.beta(j)[q]).collect(),
        };
        let (beta_hat, objective, failed) = match maximize(&ctx, &active, &start) {
            Ok(fit) => (fit.beta_hat, fit.objective, false),
            Err(crate::error::CoreError::NonConvergence { best, best_objective, grad_norm, .. }) => {
                warnings.push(format!(
                    "category {j}: PMLE for flip {flip} did not converge (grad norm {grad_norm:.2e}); candidate weighted minimally"
                ));
                (best, best_objective, true)
            }
            Err(e) => return Err(e),
        };

        let slice_cand = ctx.column_slice_from_objective(active.len(), &beta_hat, objective);
        let loglik_at_fit = params.loglik() + (slice_cand - slice_current);

        // dof is the flipped active-set size, floored at 1 when it is empty
        // (the empty flip fits the baseline column exactly, so its LR is 0
        // and its p-value 1 by construction; failures are weighted the same
        // way).
        let (lr, dof) = if failed {
            (0.0, 1)
        } else {
            (
                (2.0 * (slice_cand - slice_baseline)).max(0.0),
                active.len().max(1) as u32,
            )
        };
        let p_value = chi2_sf(lr, dof)?;
        let d10 = -(p_value.max(P_VALUE_FLOOR).log10());
        log_weights.push(d10.powf(lambda_j));

        if !failed {
            memory.insert(j, xi_cand.clone(), beta_hat.clone());
        }
        candidates.push(CandidateFit {
            flip,
            xi: xi_cand,
            active,
            beta_hat,
            objective,
            loglik_at_fit,
            lr,
            p_value,
            failed,
        });
    }

    let log_normalizer = log_sum_exp(&log_weights);
    let log_probs: Vec<f64> = log_weights.iter().map(|w| w - log_normalizer).collect();
    let probabilities: Vec<f64> = log_probs.iter().map(|lp| lp.exp()).collect();
    Ok(CategoryProposal {
        origin: origin.clone(),
        candidates,
        log_weights,
        log_normalizer,
        log_probs,
        probabilities,
        warnings,
    })
}
