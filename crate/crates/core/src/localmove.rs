//! Graph-guided local swap moves: exchange one active predictor for an
//! inactive graph-neighbor, preserving model size. The dependency graph is
//! estimated by absolute-correlation thresholding (or supplied by the user
//! as an adjacency file), and the inactive neighbor is chosen with the same
//! similarity weights as the flip kernel, at a fixed exponent λ_move.

use crate::error::{CoreError, Result};
use crate::inclusion::InclusionVector;
use crate::numcore::linalg::Matrix;
use crate::numcore::rng::{ChainRng, Rng};
use crate::proposal::{log_sum_exp, similarity_log_weight, DissimilarityFn, MhOutcome, ModelPosterior};

/// Undirected predictor dependency graph: symmetric, no self-loops,
/// neighbor lists sorted.
#[derive(Debug, Clone)]
pub struct DependencyGraph {
    adjacency: Vec<Vec<usize>>,
}

impl DependencyGraph {
    pub fn from_edges(num_predictors: usize, edges: &[(usize, usize)]) -> Result<Self> {
        let mut adjacency = vec![Vec::new(); num_predictors];
        for &(p, q) in edges {
            if p >= num_predictors || q >= num_predictors {
                return Err(CoreError::domain(
                    "DependencyGraph",
                    format!("edge ({p}, {q}) out of range for {num_predictors} predictors"),
                ));
            }
            if p == q {
                return Err(CoreError::domain("DependencyGraph", format!("self-loop at {p}")));
            }
            adjacency[p].push(q);
            adjacency[q].push(p);
        }
        for list in &mut adjacency {
            list.sort_unstable();
            list.dedup();
        }
        Ok(DependencyGraph { adjacency })
    }

    #[inline]
    pub fn num_predictors(&self) -> usize {
        self.adjacency.len()
    }

    #[inline]
    pub fn neighbors(&self, p: usize) -> &[usize] {
        &self.adjacency[p]
    }

    pub fn edges(&self) -> Vec<(usize, usize)> {
        let mut out = Vec::new();
        for (p, list) in self.adjacency.iter().enumerate() {
            for &q in list {
                if p < q {
                    out.push((p, q));
                }
            }
        }
        out
    }

    pub fn is_connected(&self) -> bool {
        let n = self.adjacency.len();
        if n == 0 {
            return true;
        }
        let mut seen = vec![false; n];
        let mut stack = vec![0usize];
        seen[0] = true;
        while let Some(v) = stack.pop() {
            for &w in &self.adjacency[v] {
                if !seen[w] {
                    seen[w] = true;
                    stack.push(w);
                }
            }
        }
        seen.into_iter().all(|s| s)
    }
}

/// Estimates the dependency graph by thresholding absolute sample
/// correlations between columns of the (standardized) design. Constant
/// columns contribute no edges and are reported in the warning list.
pub fn estimate_graph(x: &Matrix, threshold: f64) -> Result<(DependencyGraph, Vec<String>)> {
    if !(threshold > 0.0 && threshold < 1.0) {
        return Err(CoreError::domain(
            "estimate_graph",
            format!("threshold {threshold} must lie in (0, 1)"),
        ));
    }
    let n = x.rows();
    let p = x.cols();
    if n < 2 {
        return Err(CoreError::domain("estimate_graph", "need at least two rows"));
    }
    let mut warnings = Vec::new();
    let mut means = vec![0.0; p];
    for j in 0..p {
        means[j] = (0..n).map(|i| x.get(i, j)).sum::<f64>() / n as f64;
    }
    let mut sds = vec![0.0; p];
    for j in 0..p {
        let var: f64 = (0..n).map(|i| (x.get(i, j) - means[j]).powi(2)).sum();
        sds[j] = var.sqrt();
        if sds[j] == 0.0 {
            warnings.push(format!("column {j} is constant; it gets no graph edges"));
        }
    }
    let mut edges = Vec::new();
    for a in 0..p {
        if sds[a] == 0.0 {
            continue;
        }
        for b in a + 1..p {
            if sds[b] == 0.0 {
                continue;
            }
            let mut s = 0.0;
            for i in 0..n {
                s += (x.get(i, a) - means[a]) * (x.get(i, b) - means[b]);
            }
            let corr = s / (sds[a] * sds[b]);
            if corr.abs() >= threshold {
                edges.push((a, b));
            }
        }
    }
    Ok((DependencyGraph::from_edges(p, &edges)?, warnings))
}

/// Parses the adjacency file format: one "p q" edge per line, 0-based
/// indices, lines starting with '#' ignored.
pub fn parse_adjacency(text: &str, num_predictors: usize) -> Result<DependencyGraph> {
    let mut edges = Vec::new();
    for (lineno, line) in text.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let mut it = line.split_whitespace();
        let parse = |tok: Option<&str>| -> Result<usize> {
            tok.and_then(|t| t.parse::<usize>().ok()).ok_or_else(|| {
                CoreError::domain(
                    "parse_adjacency",
                    format!("line {}: expected two 0-based indices, got {line:?}", lineno + 1),
                )
            })
        };
        let p = parse(it.next())?;
        let q = parse(it.next())?;
        if it.next().is_some() {
            return Err(CoreError::domain(
                "parse_adjacency",
                format!("line {}: trailing tokens in {line:?}", lineno + 1),
            ));
        }
        edges.push((p, q));
    }
    DependencyGraph::from_edges(num_predictors, &edges)
}

/// Serializes a graph in the adjacency file format.
pub fn write_adjacency(graph: &DependencyGraph) -> String {
    let mut out = String::from("# one edge per line: p q (0-based)\n");
    for (p, q) in graph.edges() {
        out.push_str(&format!("{p} {q}\n"));
    }
    out
}

/// A(ξ): active predictors with at least one inactive graph-neighbor.
pub fn active_swappable_set(xi: &InclusionVector, graph: &DependencyGraph) -> Vec<usize> {
    (0..xi.len())
        .filter(|&p| xi.get(p) && graph.neighbors(p).iter().any(|&q| !xi.get(q)))
        .collect()
}

/// One size-preserving exchange: deactivate `deactivate`, activate `activate`.
#[derive(Debug, Clone)]
pub struct SwapCandidate {
    pub deactivate: usize,
    pub activate: usize,
    pub configuration: InclusionVector,
}

/// The swap proposal Q_move(· | ξ): uniform choice of the active component,
/// similarity-weighted choice among its inactive neighbors.
#[derive(Debug, Clone)]
pub struct SwapProposal {
    pub origin: InclusionVector,
    pub candidates: Vec<SwapCandidate>,
    /// log Q_move(candidate | origin), aligned with `candidates`.
    pub log_probs: Vec<f64>,
    pub probabilities: Vec<f64>,
}

impl SwapProposal {
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

    fn log_prob_of(&self, deactivate: usize, activate: usize) -> Option<f64> {
        self.candidates
            .iter()
            .position(|c| c.deactivate == deactivate && c.activate == activate)
            .map(|i| self.log_probs[i])
    }
}

/// Builds Q_move(ξ^{(p,q)} | ξ) = (1/|A(ξ)|) · w_q / Σ_r w_r with
/// log w_q = (−d(ξ^{(p,q)}))^{λ_move}, r over inactive neighbors of p.
/// Returns None when A(ξ) is empty and no move is available.
pub fn build_swap_proposal<M, D>(
    model: &M,
    xi: &InclusionVector,
    graph: &DependencyGraph,
    dissim: &D,
    lambda_move: f64,
) -> Result<Option<SwapProposal>>
where
    D: DissimilarityFn<M>,
{
    if !(lambda_move > 0.0) || !lambda_move.is_finite() {
        return Err(CoreError::domain(
            "build_swap_proposal",
            format!("lambda_move = {lambda_move} must be positive"),
        ));
    }
    let active = active_swappable_set(xi, graph);
    if active.is_empty() {
        return Ok(None);
    }
    let log_uniform = -(active.len() as f64).ln();
    let mut candidates = Vec::new();
    let mut log_probs = Vec::new();
    for &p in &active {
        let inactive: Vec<usize> = graph.neighbors(p).iter().copied().filter(|&q| !xi.get(q)).collect();
        let mut group_weights = Vec::with_capacity(inactive.len());
        for &q in &inactive {
            let cfg = xi.swapped(p, q);
            let d = dissim.eval(model, &cfg)?;
            if !(d <= 0.0) || !d.is_finite() {
                return Err(CoreError::eval(
                    "build_swap_proposal",
                    format!("dissimilarity {d} for swap ({p}, {q}) is not nonpositive finite"),
                ));
            }
            group_weights.push(similarity_log_weight(d, lambda_move));
            candidates.push(SwapCandidate {
                deactivate: p,
                activate: q,
                configuration: cfg,
            });
        }
        let group_norm = log_sum_exp(&group_weights);
        for w in group_weights {
            log_probs.push(log_uniform + w - group_norm);
        }
    }
    let probabilities: Vec<f64> = log_probs.iter().map(|lp| lp.exp()).collect();
    Ok(Some(SwapProposal {
        origin: xi.clone(),
        candidates,
        log_probs,
        probabilities,
    }))
}

/// Log acceptance ratio of a swap: Δ log-posterior plus
/// log Q_move(ξ | ξ^{(p,q)}) − log Q_move(ξ^{(p,q)} | ξ). The reverse kernel
/// selects the newly activated component and swaps back.
pub fn swap_log_alpha<M, D>(
    model: &M,
    xi: &InclusionVector,
    candidate: &SwapCandidate,
    graph: &DependencyGraph,
    dissim: &D,
    lambda_move: f64,
) -> Result<f64>
where
    M: ModelPosterior,
    D: DissimilarityFn<M>,
{
    let forward = build_swap_proposal(model, xi, graph, dissim, lambda_move)?
        .ok_or_else(|| CoreError::eval("swap_log_alpha", "origin has no swappable component"))?;
    let log_q_fwd = forward
        .log_prob_of(candidate.deactivate, candidate.activate)
        .ok_or_else(|| CoreError::eval("swap_log_alpha", "candidate not generated from origin"))?;
    let reverse = build_swap_proposal(model, &candidate.configuration, graph, dissim, lambda_move)?
        .expect("reverse swap always exists: the activated component has an inactive neighbor");
    let log_q_rev = reverse
        .log_prob_of(candidate.activate, candidate.deactivate)
        .expect("symmetric adjacency guarantees the reverse swap candidate");
    let log_post_ratio =
        model.log_posterior(&candidate.configuration)? - model.log_posterior(xi)?;
    Ok(log_post_ratio + log_q_rev - log_q_fwd)
}

/// MH accept/reject for a proposed swap; evaluation errors reject the move.
pub fn mh_accept_swap<M, D>(
    model: &M,
    xi: &InclusionVector,
    candidate: &SwapCandidate,
    graph: &DependencyGraph,
    dissim: &D,
    lambda_move: f64,
    rng: &mut ChainRng,
) -> MhOutcome
where
    M: ModelPosterior,
    D: DissimilarityFn<M>,
{
    let log_alpha = match swap_log_alpha(model, xi, candidate, graph, dissim, lambda_move) {
        Ok(v) => v,
        Err(e) => {
            return MhOutcome {
                accepted: false,
                state: xi.clone(),
                log_alpha: f64::NEG_INFINITY,
                diagnostic: Some(format!("swap move rejected: {e}")),
            }
        }
    };
    let u: f64 = rng.random();
    let accepted = u.ln() < log_alpha;
    MhOutcome {
        accepted,
        state: if accepted {
            candidate.configuration.clone()
        } else {
            xi.clone()
        },
        log_alpha,
        diagnostic: None,
    }
}
