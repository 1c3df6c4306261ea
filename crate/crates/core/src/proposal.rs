//! Similarity-driven proposal kernel over single-flip neighborhoods.
//!
//! Candidate configurations ξ′ in the neighborhood of ξ receive log-weights
//! (−d(ξ′))^λ, where d is a nonpositive dissimilarity (log10 of a test
//! p-value against the null model) and λ > 0 controls informativeness. All
//! weight arithmetic stays in log space with log-sum-exp normalization:
//! at the λ bound the weights reach 300^10, far beyond what exp can hold.
//! The uniform base kernel over equal-size flip neighborhoods cancels in
//! every ratio this module computes.

use crate::conjlinear::{f_dissimilarity, lr_dissimilarity, DissimKind, LinearProblem};
use crate::error::{CoreError, Result};
use crate::inclusion::InclusionVector;
use crate::numcore::rng::{ChainRng, Rng};

/// A model's discrete posterior surface, as seen by the samplers.
pub trait ModelPosterior {
    fn num_predictors(&self) -> usize;
    /// Log posterior of a configuration up to an additive constant.
    fn log_posterior(&self, xi: &InclusionVector) -> Result<f64>;
}

/// Evaluation contract for dissimilarities: nonpositive, finite scores where
/// values near 0 mean a poor fit and strongly negative values a good one.
pub trait DissimilarityFn<M: ?Sized> {
    fn eval(&self, model: &M, xi: &InclusionVector) -> Result<f64>;
}

impl ModelPosterior for LinearProblem {
    fn num_predictors(&self) -> usize {
        LinearProblem::num_predictors(self)
    }

    fn log_posterior(&self, xi: &InclusionVector) -> Result<f64> {
        crate::conjlinear::log_posterior(self, xi)
    }
}

impl DissimilarityFn<LinearProblem> for DissimKind {
    fn eval(&self, model: &LinearProblem, xi: &InclusionVector) -> Result<f64> {
        match self {
            DissimKind::FTest => f_dissimilarity(model, xi),
            DissimKind::LikelihoodRatio => lr_dissimilarity(model, xi),
        }
    }
}

/// A neighborhood of candidate moves from `origin`.
#[derive(Debug, Clone)]
pub struct Neighborhood {
    pub origin: InclusionVector,
    pub members: Vec<InclusionVector>,
}

/// All P configurations differing from `xi` in exactly one coordinate,
/// ordered by flipped index. The system is symmetric: ξ′ ∈ N(ξ) iff ξ ∈ N(ξ′).
pub fn single_flip_neighborhood(xi: &InclusionVector) -> Neighborhood {
    let members = (0..xi.len()).map(|i| xi.flipped(i)).collect();
    Neighborhood {
        origin: xi.clone(),
        members,
    }
}

/// Log-weight of a candidate: (−d)^λ. The exponential in the kernel
/// definition is never materialized.
#[inline]
pub fn similarity_log_weight(d: f64, lambda: f64) -> f64 {
    debug_assert!(d <= 0.0);
    (-d).powf(lambda)
}

/// Log-sum-exp of a slice.
pub(crate) fn log_sum_exp(values: &[f64]) -> f64 {
    let max = values.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    if !max.is_finite() {
        return max;
    }
    max + values.iter().map(|v| (v - max).exp()).sum::<f64>().ln()
}

/// A normalized categorical proposal over a neighborhood.
#[derive(Debug, Clone)]
pub struct SimilarityProposal {
    pub neighborhood: Neighborhood,
    /// Per-member (−d)^λ.
    pub log_weights: Vec<f64>,
    /// log Z(ξ): log-sum-exp of the log-weights (uniform base kernel).
    pub log_normalizer: f64,
    pub probabilities: Vec<f64>,
}

impl SimilarityProposal {
    /// log Q_λ(member i | origin).
    #[inline]
    pub fn log_prob(&self, index: usize) -> f64 {
        self.log_weights[index] - self.log_normalizer
    }

    /// Inverse-CDF draw: the first index whose cumulative probability
    /// strictly exceeds the uniform draw.
    pub fn sample_index(&self, rng: &mut ChainRng) -> usize {
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

/// Builds the similarity-driven proposal Q_λ(· | ξ) by scoring every
/// neighborhood member. Evaluations happen in member order so the result is
/// deterministic for a fixed seed.
pub fn build_proposal<M, D>(
    model: &M,
    xi: &InclusionVector,
    dissim: &D,
    lambda: f64,
) -> Result<SimilarityProposal>
where
    D: DissimilarityFn<M>,
{
    if !(lambda > 0.0) || !lambda.is_finite() {
        return Err(CoreError::domain("build_proposal", format!("lambda = {lambda} must be positive")));
    }
    let neighborhood = single_flip_neighborhood(xi);
    let mut log_weights = Vec::with_capacity(neighborhood.members.len());
    for (i, member) in neighborhood.members.iter().enumerate() {
        let d = dissim.eval(model, member)?;
        if !(d <= 0.0) || !d.is_finite() {
            return Err(CoreError::eval(
                "build_proposal",
                format!("dissimilarity {d} for member {i} ({member}) is not a nonpositive finite value"),
            ));
        }
        let lw = similarity_log_weight(d, lambda);
        if !lw.is_finite() {
            return Err(CoreError::eval(
                "build_proposal",
                format!("non-finite log-weight for member {i} ({member})"),
            ));
        }
        log_weights.push(lw);
    }
    let log_normalizer = log_sum_exp(&log_weights);
    let probabilities: Vec<f64> = log_weights
        .iter()
        .map(|lw| (lw - log_normalizer).exp())
        .collect();
    Ok(SimilarityProposal {
        neighborhood,
        log_weights,
        log_normalizer,
        probabilities,
    })
}

/// Samples a candidate from the proposal; returns it with log Q_λ(ξ′ | ξ).
pub fn sample_proposal<'a>(
    proposal: &'a SimilarityProposal,
    rng: &mut ChainRng,
) -> (&'a InclusionVector, f64) {
    let idx = proposal.sample_index(rng);
    (&proposal.neighborhood.members[idx], proposal.log_prob(idx))
}

/// Outcome of one Metropolis-Hastings flip decision.
#[derive(Debug, Clone)]
pub struct MhOutcome {
    pub accepted: bool,
    pub state: InclusionVector,
    pub log_alpha: f64,
    /// Diagnostic when an evaluation error forced a rejection.
    pub diagnostic: Option<String>,
}

/// Log acceptance ratio of the flip move ξ → ξ′:
/// Δ log-posterior + [(−d(ξ))^λ − (−d(ξ′))^λ] + [log Z(ξ) − log Z(ξ′)],
/// the last two terms arriving as log Q(ξ|ξ′) − log Q(ξ′|ξ). The reverse
/// normalizer Z(ξ′) is computed eagerly over N(ξ′); per-configuration
/// caching in the model makes revisits cheap.
pub fn flip_log_alpha<M, D>(
    model: &M,
    xi: &InclusionVector,
    candidate: &InclusionVector,
    dissim: &D,
    lambda: f64,
) -> Result<f64>
where
    M: ModelPosterior,
    D: DissimilarityFn<M>,
{
    if xi.hamming(candidate)? != 1 {
        return Err(CoreError::domain(
            "flip_log_alpha",
            "candidate must lie in the single-flip neighborhood of the current state",
        ));
    }
    let flip_index = (0..xi.len())
        .find(|&i| xi.get(i) != candidate.get(i))
        .expect("hamming distance one");
    let forward = build_proposal(model, xi, dissim, lambda)?;
    let reverse = build_proposal(model, candidate, dissim, lambda)?;
    let log_post_ratio = model.log_posterior(candidate)? - model.log_posterior(xi)?;
    Ok(log_post_ratio + reverse.log_prob(flip_index) - forward.log_prob(flip_index))
}

/// Runs the MH accept/reject step for a proposed flip. Evaluation errors
/// reject the move and surface as a diagnostic; the chain stays valid.
pub fn mh_accept_flip<M, D>(
    model: &M,
    xi: &InclusionVector,
    candidate: &InclusionVector,
    dissim: &D,
    lambda: f64,
    rng: &mut ChainRng,
) -> MhOutcome
where
    M: ModelPosterior,
    D: DissimilarityFn<M>,
{
    let log_alpha = match flip_log_alpha(model, xi, candidate, dissim, lambda) {
        Ok(v) => v,
        Err(e) => {
            return MhOutcome {
                accepted: false,
                state: xi.clone(),
                log_alpha: f64::NEG_INFINITY,
                diagnostic: Some(format!("flip move rejected: {e}")),
            }
        }
    };
    let u: f64 = rng.random();
    let accepted = u.ln() < log_alpha;
    MhOutcome {
        accepted,
        state: if accepted { candidate.clone() } else { xi.clone() },
        log_alpha,
        diagnostic: None,
    }
}
