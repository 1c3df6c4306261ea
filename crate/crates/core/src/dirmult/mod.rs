//! Dirichlet-Multinomial regression likelihood machinery: the compound pmf,
//! baseline and total log-likelihoods, incremental single-category updates,
//! and the ridge-penalized MLE with analytic gradients and Hessians.
//!
//! Counts Y (n×J) are linked to covariates through log γ_ij = β₀j + Σ x_ip
//! β_pj over the active predictors of category j. All likelihood values
//! include the multinomial normalizing constants, which cancel in every
//! ratio and difference the samplers form.

mod pmle;
mod qprobs;

pub use pmle::{dm_grad_hess, dm_pmle, maximize as pmle_maximize, CategoryContext, PmleFit, WarmStartMemory};
pub use qprobs::{dm_category_proposal_probs, CandidateFit, CategoryProposal};

use crate::error::{CoreError, Result};
use crate::inclusion::InclusionVector;
use crate::numcore::linalg::Matrix;
use crate::numcore::special::lgamma_raw;

/// Linear predictors are clamped here before exponentiation so γ never
/// overflows; excursions are reported, not fatal.
pub const ETA_CLAMP: f64 = 30.0;

/// Count data with covariates.
#[derive(Debug, Clone)]
pub struct DmData {
    /// n×J counts, row-major, stored as f64 for the lgamma arguments.
    counts: Vec<f64>,
    /// Row totals y_{i+}.
    row_totals: Vec<f64>,
    /// n×P standardized covariates.
    x: Matrix,
    n: usize,
    categories: usize,
}

impl DmData {
    pub fn new(counts: &[Vec<u64>], x: Matrix) -> Result<Self> {
        let n = counts.len();
        if n == 0 || x.rows() != n {
            return Err(CoreError::Dimension {
                op: "DmData",
                expected: n,
                got: x.rows(),
            });
        }
        let categories = counts[0].len();
        if categories == 0 {
            return Err(CoreError::domain("DmData", "need at least one category"));
        }
        let mut flat = Vec::with_capacity(n * categories);
        let mut row_totals = Vec::with_capacity(n);
        for row in counts {
            if row.len() != categories {
                return Err(CoreError::Dimension {
                    op: "DmData",
                    expected: categories,
                    got: row.len(),
                });
            }
            let mut total = 0u64;
            for &c in row {
                flat.push(c as f64);
                total += c;
            }
            row_totals.push(total as f64);
        }
        Ok(DmData {
            counts: flat,
            row_totals,
            x,
            n,
            categories,
        })
    }

    #[inline]
    pub fn n(&self) -> usize {
        self.n
    }

    #[inline]
    pub fn num_predictors(&self) -> usize {
        self.x.cols()
    }

    #[inline]
    pub fn categories(&self) -> usize {
        self.categories
    }

    #[inline]
    pub fn count(&self, i: usize, j: usize) -> f64 {
        self.counts[i * self.categories + j]
    }

    #[inline]
    pub fn row_total(&self, i: usize) -> f64 {
        self.row_totals[i]
    }

    pub fn design(&self) -> &Matrix {
        &self.x
    }
}

/// Prior hyperparameters: intercept and coefficient variances, Beta-Binomial
/// inclusion hyperparameters, and the ridge constant of the PMLE.
#[derive(Debug, Clone)]
pub struct DmPriors {
    pub s2: Vec<f64>,
    pub r2: Vec<f64>,
    pub a: f64,
    pub b: f64,
    pub c: f64,
}

impl DmPriors {
    /// c = 1, a = 1, b = 9 (prior inclusion probability 0.1), r² = s² = 10.
    pub fn standard_defaults(categories: usize) -> Self {
        DmPriors {
            s2: vec![10.0; categories],
            r2: vec![10.0; categories],
            a: 1.0,
            b: 9.0,
            c: 1.0,
        }
    }

    pub fn validate(&self, categories: usize) -> Result<()> {
        if self.s2.len() != categories || self.r2.len() != categories {
            return Err(CoreError::Dimension {
                op: "DmPriors",
                expected: categories,
                got: self.s2.len().min(self.r2.len()),
            });
        }
        if self.s2.iter().chain(&self.r2).any(|&v| !(v > 0.0))
            || !(self.a > 0.0)
            || !(self.b > 0.0)
            || !(self.c > 0.0)
        {
            return Err(CoreError::domain("DmPriors", "all hyperparameters must be positive"));
        }
        Ok(())
    }
}

/// Log-pmf of one Dirichlet-Multinomial observation.
pub fn dm_logpmf(counts: &[f64], gamma: &[f64]) -> Result<f64> {
    if counts.len() != gamma.len() {
        return Err(CoreError::Dimension {
            op: "dm_logpmf",
            expected: counts.len(),
            got: gamma.len(),
        });
    }
    let mut gamma_sum = 0.0;
    for &g in gamma {
        if !(g > 0.0) || !g.is_finite() {
            return Err(CoreError::domain("dm_logpmf", format!("gamma entry {g} must be positive")));
        }
        gamma_sum += g;
    }
    let total: f64 = counts.iter().sum();
    let mut ll = lgamma_raw(total + 1.0) + lgamma_raw(gamma_sum) - lgamma_raw(total + gamma_sum);
    for (&y, &g) in counts.iter().zip(gamma) {
        ll += lgamma_raw(y + g) - lgamma_raw(y + 1.0) - lgamma_raw(g);
    }
    Ok(ll)
}

/// Full sampler state for the DM model: intercepts, per-category coefficient
/// vectors and inclusion vectors, plus cached linear predictors, Dirichlet
/// concentrations, row sums and total log-likelihood.
#[derive(Debug, Clone)]
pub struct DmParams {
    beta0: Vec<f64>,
    /// Per category: length-P coefficients, zero wherever excluded.
    beta: Vec<Vec<f64>>,
    xi: Vec<InclusionVector>,
    /// n×J unclamped linear predictors.
    eta: Vec<f64>,
    /// n×J concentrations exp(clamped η).
    gamma: Vec<f64>,
    gamma_row: Vec<f64>,
    loglik: f64,
    accepted_updates: usize,
    /// Number of η values that hit the clamp during the last full refresh.
    pub clamp_events: usize,
}

/// How often the incremental likelihood cache is re-derived from scratch.
const RESYNC_INTERVAL: usize = 1000;
/// Divergence beyond this between cached and recomputed log-likelihood is
/// reported as a drift diagnostic.
const DRIFT_TOLERANCE: f64 = 1e-6;

impl DmParams {
    /// Builds the state with all caches derived from (β₀, β, ξ).
    pub fn new(
        data: &DmData,
        beta0: Vec<f64>,
        beta: Vec<Vec<f64>>,
        xi: Vec<InclusionVector>,
    ) -> Result<Self> {
        let j_cats = data.categories();
        let p = data.num_predictors();
        if beta0.len() != j_cats || beta.len() != j_cats || xi.len() != j_cats {
            return Err(CoreError::Dimension {
                op: "DmParams",
                expected: j_cats,
                got: beta0.len().min(beta.len()).min(xi.len()),
            });
        }
        for j in 0..j_cats {
            if beta[j].len() != p || xi[j].len() != p {
                return Err(CoreError::Dimension {
                    op: "DmParams",
                    expected: p,
                    got: beta[j].len().min(xi[j].len()),
                });
            }
            for (q, &b) in beta[j].iter().enumerate() {
                if b != 0.0 && !xi[j].get(q) {
                    return Err(CoreError::domain(
                        "DmParams",
                        format!("beta[{j}][{q}] nonzero but excluded by xi"),
                    ));
                }
            }
        }
        let mut params = DmParams {
            beta0,
            beta,
            xi,
            eta: vec![0.0; data.n() * j_cats],
            gamma: vec![0.0; data.n() * j_cats],
            gamma_row: vec![0.0; data.n()],
            loglik: 0.0,
            accepted_updates: 0,
            clamp_events: 0,
        };
        params.refresh_all(data);
        Ok(params)
    }

    /// The all-zero state at the given intercepts.
    pub fn baseline(data: &DmData, beta0: Vec<f64>) -> Result<Self> {
        let j = data.categories();
        let p = data.num_predictors();
        Self::new(
            data,
            beta0,
            vec![vec![0.0; p]; j],
            (0..j).map(|_| InclusionVector::empty(p)).collect(),
        )
    }

    #[inline]
    pub fn beta0(&self) -> &[f64] {
        &self.beta0
    }

    #[inline]
    pub fn beta(&self, j: usize) -> &[f64] {
        &self.beta[j]
    }

    #[inline]
    pub fn xi(&self, j: usize) -> &InclusionVector {
        &self.xi[j]
    }

    #[inline]
    pub fn loglik(&self) -> f64 {
        self.loglik
    }

    #[inline]
    pub fn gamma(&self, i: usize, j: usize) -> f64 {
        self.gamma[i * self.beta0.len() + j]
    }

    #[inline]
    pub fn gamma_row(&self, i: usize) -> f64 {
        self.gamma_row[i]
    }

    /// Unclamped linear predictor cache.
    #[inline]
    pub fn eta_at(&self, i: usize, j: usize) -> f64 {
        self.eta[i * self.beta0.len() + j]
    }

    /// Column j of the concentration cache.
    pub fn gamma_column(&self, j: usize) -> Vec<f64> {
        let cats = self.beta0.len();
        (0..self.gamma_row.len()).map(|i| self.gamma[i * cats + j]).collect()
    }

    /// Active (predictor, category, value) triplets.
    pub fn active_triplets(&self) -> Vec<(u16, u16, f64)> {
        let mut out = Vec::new();
        for (j, xi) in self.xi.iter().enumerate() {
            for p in xi.active_indices() {
                out.push((p as u16, j as u16, self.beta[j][p]));
            }
        }
        out
    }

    fn refresh_all(&mut self, data: &DmData) {
        let cats = self.beta0.len();
        self.clamp_events = 0;
        for i in 0..data.n() {
            let row = data.design().row(i);
            let mut total = 0.0;
            for j in 0..cats {
                let mut eta = self.beta0[j];
                for p in self.xi[j].active_indices() {
                    eta += row[p] * self.beta[j][p];
                }
                self.eta[i * cats + j] = eta;
                if eta.abs() > ETA_CLAMP {
                    self.clamp_events += 1;
                }
                let g = eta.clamp(-ETA_CLAMP, ETA_CLAMP).exp();
                self.gamma[i * cats + j] = g;
                total += g;
            }
            self.gamma_row[i] = total;
        }
        self.loglik = total_loglik_from_caches(data, &self.gamma, &self.gamma_row);
    }

    /// Replaces the intercept vector, shifting every cached predictor.
    pub fn apply_beta0(&mut self, data: &DmData, new_beta0: Vec<f64>) {
        let cats = self.beta0.len();
        for i in 0..data.n() {
            let mut total = 0.0;
            for j in 0..cats {
                let eta = self.eta[i * cats + j] + (new_beta0[j] - self.beta0[j]);
                self.eta[i * cats + j] = eta;
                let g = eta.clamp(-ETA_CLAMP, ETA_CLAMP).exp();
                self.gamma[i * cats + j] = g;
                total += g;
            }
            self.gamma_row[i] = total;
        }
        self.beta0 = new_beta0;
        self.loglik = total_loglik_from_caches(data, &self.gamma, &self.gamma_row);
    }

    /// Installs an accepted category update: new coefficients and inclusion
    /// vector for category j, the already-computed γ column, and the new
    /// total log-likelihood. Returns a drift diagnostic when the periodic
    /// resync detects divergence beyond tolerance.
    pub fn apply_category(
        &mut self,
        data: &DmData,
        j: usize,
        beta_j: Vec<f64>,
        xi_j: InclusionVector,
        gamma_col: &[f64],
        eta_col: &[f64],
        new_loglik: f64,
    ) -> Option<String> {
        let cats = self.beta0.len();
        for i in 0..data.n() {
            let old = self.gamma[i * cats + j];
            self.gamma[i * cats + j] = gamma_col[i];
            self.eta[i * cats + j] = eta_col[i];
            self.gamma_row[i] += gamma_col[i] - old;
        }
        self.beta[j] = beta_j;
        self.xi[j] = xi_j;
        self.loglik = new_loglik;
        self.accepted_updates += 1;
        if self.accepted_updates % RESYNC_INTERVAL == 0 {
            let cached = self.loglik;
            self.refresh_all(data);
            let drift = (cached - self.loglik).abs();
            if drift > DRIFT_TOLERANCE {
                return Some(format!(
                    "incremental log-likelihood drift {drift:.3e} after {} accepted updates",
                    self.accepted_updates
                ));
            }
        }
        None
    }
}

/// Total log-likelihood from concentration caches.
fn total_loglik_from_caches(data: &DmData, gamma: &[f64], gamma_row: &[f64]) -> f64 {
    let cats = data.categories();
    let mut ll = 0.0;
    for i in 0..data.n() {
        let y_tot = data.row_total(i);
        let g_tot = gamma_row[i];
        ll += lgamma_raw(y_tot + 1.0) + lgamma_raw(g_tot) - lgamma_raw(y_tot + g_tot);
        for j in 0..cats {
            let y = data.count(i, j);
            let g = gamma[i * cats + j];
            ll += lgamma_raw(y + g) - lgamma_raw(g) - lgamma_raw(y + 1.0);
        }
    }
    ll
}

/// Total log-likelihood at the cached state (equals Σ_i dm_logpmf).
pub fn dm_total_loglik(data: &DmData, params: &DmParams) -> f64 {
    debug_assert_eq!(params.beta0.len(), data.categories());
    params.loglik()
}

/// Baseline log-likelihood: no covariates anywhere, γ_ij = exp(β₀j). Serves
/// as the global reference for the likelihood-ratio statistics.
pub fn dm_baseline_loglik(data: &DmData, beta0: &[f64]) -> Result<f64> {
    if beta0.len() != data.categories() {
        return Err(CoreError::Dimension {
            op: "dm_baseline_loglik",
            expected: data.categories(),
            got: beta0.len(),
        });
    }
    let gamma0: Vec<f64> = beta0.iter().map(|b| b.clamp(-ETA_CLAMP, ETA_CLAMP).exp()).collect();
    let g_tot: f64 = gamma0.iter().sum();
    let lg0: Vec<f64> = gamma0.iter().map(|&g| lgamma_raw(g)).collect();
    let lg_tot = lgamma_raw(g_tot);
    let mut ll = 0.0;
    for i in 0..data.n() {
        let y_tot = data.row_total(i);
        ll += lgamma_raw(y_tot + 1.0) + lg_tot - lgamma_raw(y_tot + g_tot);
        for j in 0..data.categories() {
            let y = data.count(i, j);
            if y > 0.0 {
                ll += lgamma_raw(y + gamma0[j]) - lg0[j] - lgamma_raw(y + 1.0);
            }
        }
    }
    Ok(ll)
}

/// Incremental single-category likelihood update. `new_gamma_col` replaces
/// column j of the concentration matrix; the per-cell correction Δ₁ and the
/// row-sum correction Δ₂ are returned with the new total ℓ + Δ₁ + Δ₂.
pub fn dm_incremental_loglik(
    data: &DmData,
    params: &DmParams,
    j: usize,
    new_gamma_col: &[f64],
) -> Result<(f64, f64, f64)> {
    let cats = data.categories();
    if j >= cats {
        return Err(CoreError::Dimension {
            op: "dm_incremental_loglik",
            expected: cats,
            got: j,
        });
    }
    if new_gamma_col.len() != data.n() {
        return Err(CoreError::Dimension {
            op: "dm_incremental_loglik",
            expected: data.n(),
            got: new_gamma_col.len(),
        });
    }
    let mut delta1 = 0.0;
    let mut delta2 = 0.0;
    for i in 0..data.n() {
        let g_new = new_gamma_col[i];
        if !(g_new > 0.0) || !g_new.is_finite() {
            return Err(CoreError::domain(
                "dm_incremental_loglik",
                format!("replacement gamma {g_new} at row {i} must be positive"),
            ));
        }
        let g_old = params.gamma(i, j);
        let y = data.count(i, j);
        // Zero counts and identical replacements contribute exactly nothing.
        if y > 0.0 && g_new != g_old {
            delta1 += lgamma_raw(y + g_new) - lgamma_raw(g_new) - lgamma_raw(y + g_old)
                + lgamma_raw(g_old);
        }
        let y_tot = data.row_total(i);
        let row_old = params.gamma_row(i);
        // Grouped so an identical replacement reproduces row_old exactly.
        let row_new = row_old + (g_new - g_old);
        if !(row_new > 0.0) {
            return Err(CoreError::domain(
                "dm_incremental_loglik",
                format!("updated row sum {row_new} at row {i} not positive"),
            ));
        }
        delta2 += lgamma_raw(row_new) - lgamma_raw(row_old) - lgamma_raw(y_tot + row_new)
            + lgamma_raw(y_tot + row_old);
    }
    Ok((params.loglik() + delta1 + delta2, delta1, delta2))
}

/// γ column and unclamped η column for category j at the given coefficients.
pub fn link_column(
    data: &DmData,
    beta0_j: f64,
    active: &[usize],
    beta_active: &[f64],
) -> (Vec<f64>, Vec<f64>) {
    debug_assert_eq!(active.len(), beta_active.len());
    let n = data.n();
    let mut gamma = Vec::with_capacity(n);
    let mut eta_col = Vec::with_capacity(n);
    for i in 0..n {
        let row = data.design().row(i);
        let mut eta = beta0_j;
        for (idx, &p) in active.iter().enumerate() {
            eta += row[p] * beta_active[idx];
        }
        eta_col.push(eta);
        gamma.push(eta.clamp(-ETA_CLAMP, ETA_CLAMP).exp());
    }
    (gamma, eta_col)
}
