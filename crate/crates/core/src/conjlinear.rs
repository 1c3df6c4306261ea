//! Conjugate Normal-Inverse-Gamma linear model: closed-form log marginal
//! likelihood of a configuration, Beta-Bernoulli model prior, and the F-test
//! and likelihood-ratio dissimilarities driving the proposal kernels.
//!
//! The design is standardized with an always-active intercept handled
//! internally: configurations index only the P predictors, and both test
//! statistics compare the active set against the intercept-only null.

use std::collections::HashMap;
use std::sync::RwLock;

use crate::error::{CoreError, Result};
use crate::inclusion::InclusionVector;
use crate::numcore::linalg::{cholesky, dot, least_squares, Matrix, SymmetricMatrix};
use crate::numcore::special::{chi2_sf, f_sf, lgamma_raw, ln_beta};

/// p-values are floored here before log10, so dissimilarities live in
/// [-300, 0] and proposal weights stay finite at every λ.
pub const P_VALUE_FLOOR: f64 = 1e-300;

/// Smallest dissimilarity after flooring.
pub const DISSIMILARITY_FLOOR: f64 = -300.0;

/// Normal-Inverse-Gamma prior on (β, σ²), intercept block first.
#[derive(Debug, Clone)]
pub struct NigPrior {
    /// Prior mean, length P + 1.
    pub mu0: Vec<f64>,
    /// Prior precision, (P+1) × (P+1), symmetric positive definite.
    pub lambda0: SymmetricMatrix,
    pub a0: f64,
    pub b0: f64,
}

impl NigPrior {
    /// Diffuse default: μ₀ = 0, Λ₀ = 0.01 I, a₀ = b₀ = 0.01.
    pub fn diffuse(num_predictors: usize) -> Self {
        NigPrior {
            mu0: vec![0.0; num_predictors + 1],
            lambda0: SymmetricMatrix::scaled_identity(num_predictors + 1, 0.01),
            a0: 0.01,
            b0: 0.01,
        }
    }

    fn validate(&self, num_predictors: usize) -> Result<()> {
        if self.mu0.len() != num_predictors + 1 {
            return Err(CoreError::Dimension {
                op: "NigPrior",
                expected: num_predictors + 1,
                got: self.mu0.len(),
            });
        }
        if self.lambda0.dim() != num_predictors + 1 {
            return Err(CoreError::Dimension {
                op: "NigPrior",
                expected: num_predictors + 1,
                got: self.lambda0.dim(),
            });
        }
        if !(self.a0 > 0.0) || !(self.b0 > 0.0) {
            return Err(CoreError::domain("NigPrior", "a0 and b0 must be positive"));
        }
        Ok(())
    }
}

/// Beta hyperprior on the Bernoulli inclusion probability.
#[derive(Debug, Clone, Copy)]
pub struct ModelPrior {
    pub a_pi: f64,
    pub b_pi: f64,
}

impl Default for ModelPrior {
    fn default() -> Self {
        ModelPrior { a_pi: 1.0, b_pi: 1.0 }
    }
}

/// Per-configuration statistics, computed once and cached.
#[derive(Debug, Clone, Copy)]
pub struct ConfigStats {
    pub rss: f64,
    pub rank_deficient: bool,
    pub log_marginal: f64,
    /// F-test dissimilarity; None when degrees of freedom ran out.
    pub d_f: Option<f64>,
    /// Likelihood-ratio dissimilarity; None when degrees of freedom ran out.
    pub d_lr: Option<f64>,
}

/// A variable-selection problem instance: standardized design, response,
/// priors, and a concurrent get-or-compute cache of per-configuration
/// statistics. Immutable after construction apart from the cache.
pub struct LinearProblem {
    x: Matrix,
    y: Vec<f64>,
    prior: NigPrior,
    model_prior: ModelPrior,
    /// Gram matrix of [1 | X], intercept block first.
    gram: SymmetricMatrix,
    /// [1 | X]ᵀ y.
    xty: Vec<f64>,
    yty: f64,
    /// Intercept-only residual sum of squares.
    rss0: f64,
    cache: RwLock<HashMap<InclusionVector, ConfigStats>>,
}

impl LinearProblem {
    pub fn new(x: Matrix, y: Vec<f64>, prior: NigPrior, model_prior: ModelPrior) -> Result<Self> {
        let n = x.rows();
        let p = x.cols();
        if y.len() != n {
            return Err(CoreError::Dimension {
                op: "LinearProblem",
                expected: n,
                got: y.len(),
            });
        }
        if n < 2 {
            return Err(CoreError::domain("LinearProblem", "need at least two observations"));
        }
        prior.validate(p)?;
        if !(model_prior.a_pi > 0.0) || !(model_prior.b_pi > 0.0) {
            return Err(CoreError::domain("LinearProblem", "model prior hyperparameters must be positive"));
        }

        // Gram of the intercept-augmented design.
        let mut gram = SymmetricMatrix::zeros(p + 1);
        gram.set(0, 0, n as f64);
        for j in 0..p {
            let mut s1 = 0.0;
            for i in 0..n {
                s1 += x.get(i, j);
            }
            gram.set(0, j + 1, s1);
            for k in j..p {
                let mut s = 0.0;
                for i in 0..n {
                    s += x.get(i, j) * x.get(i, k);
                }
                gram.set(j + 1, k + 1, s);
            }
        }
        let mut xty = vec![0.0; p + 1];
        xty[0] = y.iter().sum();
        for j in 0..p {
            let mut s = 0.0;
            for i in 0..n {
                s += x.get(i, j) * y[i];
            }
            xty[j + 1] = s;
        }
        let yty = dot(&y, &y);
        let ybar = xty[0] / n as f64;
        let rss0 = (yty - n as f64 * ybar * ybar).max(0.0);

        Ok(LinearProblem {
            x,
            y,
            prior,
            model_prior,
            gram,
            xty,
            yty,
            rss0,
            cache: RwLock::new(HashMap::new()),
        })
    }

    /// Convenience constructor with the diffuse default priors.
    pub fn with_default_priors(x: Matrix, y: Vec<f64>) -> Result<Self> {
        let p = x.cols();
        Self::new(x, y, NigPrior::diffuse(p), ModelPrior::default())
    }

    #[inline]
    pub fn n(&self) -> usize {
        self.x.rows()
    }

    #[inline]
    pub fn num_predictors(&self) -> usize {
        self.x.cols()
    }

    pub fn design(&self) -> &Matrix {
        &self.x
    }

    pub fn response(&self) -> &[f64] {
        &self.y
    }

    pub fn model_prior(&self) -> ModelPrior {
        self.model_prior
    }

    pub fn rss0(&self) -> f64 {
        self.rss0
    }

    fn check_len(&self, xi: &InclusionVector) -> Result<()> {
        if xi.len() != self.num_predictors() {
            return Err(CoreError::Dimension {
                op: "LinearProblem",
                expected: self.num_predictors(),
                got: xi.len(),
            });
        }
        Ok(())
    }

    /// Cached per-configuration statistics. Concurrent callers may race to
    /// compute the same entry; values are identical so last write wins.
    pub fn stats(&self, xi: &InclusionVector) -> Result<ConfigStats> {
        self.check_len(xi)?;
        if let Some(hit) = self.cache.read().unwrap().get(xi) {
            return Ok(*hit);
        }
        let computed = self.compute_stats(xi)?;
        self.cache.write().unwrap().insert(xi.clone(), computed);
        Ok(computed)
    }

    /// Same computation with the cache bypassed (used to check transparency).
    pub fn stats_uncached(&self, xi: &InclusionVector) -> Result<ConfigStats> {
        self.check_len(xi)?;
        self.compute_stats(xi)
    }

    fn compute_stats(&self, xi: &InclusionVector) -> Result<ConfigStats> {
        let n = self.n();
        let p_active = xi.popcount();

        // Augmented index set: intercept plus active columns.
        let mut idx = Vec::with_capacity(p_active + 1);
        idx.push(0usize);
        idx.extend(xi.active_indices().iter().map(|&p| p + 1));

        let g_sub = self.gram.principal_submatrix(&idx);
        let b_sub: Vec<f64> = idx.iter().map(|&i| self.xty[i]).collect();

        // Residual sum of squares via the Gram system, falling back to a
        // pivoted QR on the explicit subset design when the Gram matrix is
        // numerically singular (collinear active sets).
        let (rss, rank_deficient) = match cholesky(&g_sub) {
            Ok(chol) => {
                let beta = chol.solve(&b_sub);
                ((self.yty - dot(&b_sub, &beta)).max(0.0), false)
            }
            Err(_) => {
                let mut cols = Matrix::zeros(n, idx.len());
                for i in 0..n {
                    cols.set(i, 0, 1.0);
                    for (c, &j) in idx.iter().enumerate().skip(1) {
                        cols.set(i, c, self.x.get(i, j - 1));
                    }
                }
                let fit = least_squares(&cols, &self.y)?;
                (fit.rss, true)
            }
        };

        let log_marginal = self.log_marginal_from_gram(&idx, &g_sub, &b_sub)?;

        let (d_f, d_lr) = if p_active == 0 {
            // Null configuration: dissimilarity 0 by convention (p-value 1).
            (Some(0.0), Some(0.0))
        } else if n <= p_active + 1 {
            (None, None)
        } else {
            let dof2 = (n - p_active - 1) as u32;
            let f_stat = if rss <= 0.0 {
                f64::INFINITY
            } else {
                ((self.rss0 - rss).max(0.0) / p_active as f64) / (rss / dof2 as f64)
            };
            let p_f = if f_stat.is_finite() {
                f_sf(f_stat, p_active as u32, dof2)?
            } else {
                0.0
            };
            let lr_stat = if rss <= 0.0 {
                f64::INFINITY
            } else {
                (n as f64) * (self.rss0 / rss).ln().max(0.0)
            };
            let p_lr = if lr_stat.is_finite() {
                chi2_sf(lr_stat, p_active as u32)?
            } else {
                0.0
            };
            (
                Some(p_f.max(P_VALUE_FLOOR).log10()),
                Some(p_lr.max(P_VALUE_FLOOR).log10()),
            )
        };

        Ok(ConfigStats {
            rss,
            rank_deficient,
            log_marginal,
            d_f,
            d_lr,
        })
    }

    /// Closed-form log marginal likelihood with conjugate updates on the
    /// subset blocks: Λₙ = XᵀX + Λ₀, μₙ = Λₙ⁻¹(Xᵀy + Λ₀μ₀), aₙ = a₀ + n/2,
    /// bₙ = b₀ + (yᵀy + μ₀ᵀΛ₀μ₀ − μₙᵀΛₙμₙ)/2.
    fn log_marginal_from_gram(
        &self,
        idx: &[usize],
        g_sub: &SymmetricMatrix,
        b_sub: &[f64],
    ) -> Result<f64> {
        let n = self.n() as f64;
        let k = idx.len();
        let lambda0 = self.prior.lambda0.principal_submatrix(idx);
        let mu0: Vec<f64> = idx.iter().map(|&i| self.prior.mu0[i]).collect();

        let mut lambda_n = g_sub.clone();
        for i in 0..k {
            for j in i..k {
                lambda_n.set(i, j, lambda_n.get(i, j) + lambda0.get(i, j));
            }
        }

        let chol0 = cholesky(&lambda0)?;
        let chol_n = cholesky(&lambda_n).map_err(|e| {
            CoreError::eval("log_marginal_likelihood", format!("posterior precision not PD: {e}"))
        })?;

        let l0_mu0 = lambda0.mul_vec(&mu0);
        let rhs: Vec<f64> = b_sub.iter().zip(&l0_mu0).map(|(a, b)| a + b).collect();
        let mu_n = chol_n.solve(&rhs);

        let a_n = self.prior.a0 + 0.5 * n;
        let quad0 = dot(&mu0, &l0_mu0);
        let quad_n = dot(&mu_n, &rhs);
        let b_n = self.prior.b0 + 0.5 * (self.yty + quad0 - quad_n);
        if !(b_n > 0.0) {
            return Err(CoreError::eval(
                "log_marginal_likelihood",
                format!(
                    "posterior scale b_n = {b_n} not positive (yty = {}, quad0 = {quad0}, quad_n = {quad_n})",
                    self.yty
                ),
            ));
        }

        Ok(-0.5 * n * (2.0 * std::f64::consts::PI).ln()
            + 0.5 * (chol0.log_det() - chol_n.log_det())
            + lgamma_raw(a_n)
            - lgamma_raw(self.prior.a0)
            + self.prior.a0 * self.prior.b0.ln()
            - a_n * b_n.ln())
    }
}

/// Log marginal likelihood of a configuration, Eq.-(9)-style closed form.
pub fn log_marginal_likelihood(problem: &LinearProblem, xi: &InclusionVector) -> Result<f64> {
    Ok(problem.stats(xi)?.log_marginal)
}

/// Beta-Bernoulli model prior with π integrated out:
/// ln B(|ξ| + a_π, P − |ξ| + b_π) − ln B(a_π, b_π).
pub fn log_model_prior(model_prior: &ModelPrior, xi: &InclusionVector) -> f64 {
    let k = xi.popcount() as f64;
    let p = xi.len() as f64;
    let num = ln_beta(k + model_prior.a_pi, p - k + model_prior.b_pi)
        .expect("positive Beta arguments");
    let den = ln_beta(model_prior.a_pi, model_prior.b_pi).expect("positive Beta arguments");
    num - den
}

/// Unnormalized log posterior of a configuration: marginal plus model prior.
pub fn log_posterior(problem: &LinearProblem, xi: &InclusionVector) -> Result<f64> {
    Ok(problem.stats(xi)?.log_marginal + log_model_prior(&problem.model_prior(), xi))
}

/// F-test dissimilarity d_F = log10 of the F survival p-value against the
/// intercept-only null, floored at log10 of the p-value floor.
pub fn f_dissimilarity(problem: &LinearProblem, xi: &InclusionVector) -> Result<f64> {
    problem.stats(xi)?.d_f.ok_or(CoreError::DegreesOfFreedom {
        n: problem.n(),
        active: xi.popcount(),
    })
}

/// Likelihood-ratio dissimilarity d_LR = log10 of the χ² survival p-value of
/// Λ = n ln(RSS₀ / RSS) with the σ²-profiled Gaussian likelihood.
pub fn lr_dissimilarity(problem: &LinearProblem, xi: &InclusionVector) -> Result<f64> {
    problem.stats(xi)?.d_lr.ok_or(CoreError::DegreesOfFreedom {
        n: problem.n(),
        active: xi.popcount(),
    })
}

/// Which test statistic drives the proposal weights.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum DissimKind {
    FTest,
    LikelihoodRatio,
}

impl DissimKind {
    pub fn eval(&self, problem: &LinearProblem, xi: &InclusionVector) -> Result<f64> {
        match self {
            DissimKind::FTest => f_dissimilarity(problem, xi),
            DissimKind::LikelihoodRatio => lr_dissimilarity(problem, xi),
        }
    }
}

/// Exact posterior over all 2^P configurations in integer order (P ≤ 20).
/// This is the enumeration oracle behind the sampler exactness checks.
pub fn enumerate_posterior(problem: &LinearProblem) -> Result<Vec<f64>> {
    let p = problem.num_predictors();
    let states = InclusionVector::enumerate_all(p);
    let mut logs = Vec::with_capacity(states.len());
    for xi in &states {
        logs.push(log_posterior(problem, xi)?);
    }
    let max = logs.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let mut probs: Vec<f64> = logs.iter().map(|l| (l - max).exp()).collect();
    let total: f64 = probs.iter().sum();
    for p in &mut probs {
        *p /= total;
    }
    Ok(probs)
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::prelude::*;
    use rand_chacha::ChaCha8Rng;

    fn small_problem(seed: u64, n: usize, p: usize) -> LinearProblem {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let rows: Vec<Vec<f64>> = (0..n)
            .map(|_| (0..p).map(|_| rng.random::<f64>() * 2.0 - 1.0).collect())
            .collect();
        let y: Vec<f64> = (0..n).map(|_| rng.random::<f64>() * 2.0 - 1.0).collect();
        LinearProblem::with_default_priors(Matrix::from_rows(&rows), y).unwrap()
    }

    #[test]
    fn model_prior_uniform_single_predictor() {
        let mp = ModelPrior { a_pi: 1.0, b_pi: 1.0 };
        let xi = InclusionVector::from_bits(&[true]);
        assert!((log_model_prior(&mp, &xi) - 0.5f64.ln()).abs() < 1e-14);
    }

    #[test]
    fn model_prior_normalizes() {
        let mp = ModelPrior { a_pi: 1.0, b_pi: 1.0 };
        let total: f64 = InclusionVector::enumerate_all(2)
            .iter()
            .map(|xi| log_model_prior(&mp, xi).exp())
            .sum();
        assert!((total - 1.0).abs() < 1e-12);
    }

    #[test]
    fn model_prior_ratio_matches_direct_beta_arithmetic() {
        let mp = ModelPrior { a_pi: 1.0, b_pi: 9.0 };
        let p = 10;
        let zero = InclusionVector::empty(p);
        let one = zero.flipped(3);
        let ratio = log_model_prior(&mp, &one) - log_model_prior(&mp, &zero);
        let direct = ln_beta(2.0, 18.0).unwrap() - ln_beta(1.0, 19.0).unwrap();
        assert!((ratio - direct).abs() < 1e-13);
    }

    #[test]
    fn duplicated_predictors_give_identical_marginals() {
        // Two configurations whose active columns coincide must score equal.
        let mut rng = ChaCha8Rng::seed_from_u64(21);
        let n = 30;
        let rows: Vec<Vec<f64>> = (0..n)
            .map(|_| {
                let a = rng.random::<f64>() - 0.5;
                let b = rng.random::<f64>() - 0.5;
                vec![a, b, a]
            })
            .collect();
        let y: Vec<f64> = (0..n).map(|_| rng.random::<f64>() - 0.5).collect();
        let problem = LinearProblem::with_default_priors(Matrix::from_rows(&rows), y).unwrap();
        let xi_a = InclusionVector::from_bits(&[true, true, false]);
        let xi_b = InclusionVector::from_bits(&[false, true, true]);
        let la = log_marginal_likelihood(&problem, &xi_a).unwrap();
        let lb = log_marginal_likelihood(&problem, &xi_b).unwrap();
        assert!((la - lb).abs() < 1e-9, "{la} vs {lb}");
    }

    #[test]
    fn null_dissimilarity_is_zero() {
        let problem = small_problem(1, 25, 4);
        let null = InclusionVector::empty(4);
        assert_eq!(f_dissimilarity(&problem, &null).unwrap(), 0.0);
        assert_eq!(lr_dissimilarity(&problem, &null).unwrap(), 0.0);
    }

    #[test]
    fn dissimilarities_are_nonpositive() {
        let problem = small_problem(2, 40, 6);
        for xi in InclusionVector::enumerate_all(6) {
            let df = f_dissimilarity(&problem, &xi).unwrap();
            let dlr = lr_dissimilarity(&problem, &xi).unwrap();
            assert!(df <= 0.0 && df >= DISSIMILARITY_FLOOR);
            assert!(dlr <= 0.0 && dlr >= DISSIMILARITY_FLOOR);
        }
    }

    #[test]
    fn f_dissimilarity_hand_instance() {
        // n = 6, one active predictor: d = log10 f_sf(F, 1, 4) with F built
        // from the two RSS values directly.
        let rows = vec![
            vec![0.9], vec![-1.1], vec![0.3], vec![-0.2], vec![1.4], vec![-1.3],
        ];
        let y = vec![1.1, -0.7, 0.5, 0.2, 1.9, -1.6];
        let problem =
            LinearProblem::with_default_priors(Matrix::from_rows(&rows), y.clone()).unwrap();
        let xi = InclusionVector::from_bits(&[true]);

        let n = 6.0;
        let ybar: f64 = y.iter().sum::<f64>() / n;
        let rss0: f64 = y.iter().map(|v| (v - ybar) * (v - ybar)).sum();
        // Simple regression RSS via explicit formulas.
        let xbar: f64 = rows.iter().map(|r| r[0]).sum::<f64>() / n;
        let sxy: f64 = rows
            .iter()
            .zip(&y)
            .map(|(r, yi)| (r[0] - xbar) * (yi - ybar))
            .sum();
        let sxx: f64 = rows.iter().map(|r| (r[0] - xbar) * (r[0] - xbar)).sum();
        let rss1 = rss0 - sxy * sxy / sxx;
        let f_stat = (rss0 - rss1) / (rss1 / 4.0);
        let expected = f_sf(f_stat, 1, 4).unwrap().log10();
        let got = f_dissimilarity(&problem, &xi).unwrap();
        assert!((got - expected).abs() < 1e-10, "{got} vs {expected}");
    }

    #[test]
    fn lr_statistic_profile_algebra() {
        // With RSS0/RSS = exp(x/n), the deviance is exactly x.
        let problem = small_problem(3, 50, 3);
        let xi = InclusionVector::from_bits(&[true, false, false]);
        let stats = problem.stats(&xi).unwrap();
        let lam = (problem.n() as f64) * (problem.rss0() / stats.rss).ln();
        let expected = chi2_sf(lam, 1).unwrap().max(P_VALUE_FLOOR).log10();
        assert!((stats.d_lr.unwrap() - expected).abs() < 1e-12);
        let x = 3.7;
        let ratio = (x / problem.n() as f64).exp();
        assert!(((problem.n() as f64) * ratio.ln() - x).abs() < 1e-12);
    }

    #[test]
    fn lr_statistic_monotone_under_nesting() {
        // Adding a predictor never decreases the deviance.
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        for _ in 0..100 {
            let n = 20 + rng.random_range(0..20);
            let p = 4;
            let rows: Vec<Vec<f64>> = (0..n)
                .map(|_| (0..p).map(|_| rng.random::<f64>() - 0.5).collect())
                .collect();
            let y: Vec<f64> = (0..n).map(|_| rng.random::<f64>() - 0.5).collect();
            let problem =
                LinearProblem::with_default_priors(Matrix::from_rows(&rows), y).unwrap();
            let mut xi = InclusionVector::empty(p);
            let mut last_rss = problem.rss0();
            for j in 0..p {
                xi.set(j, true);
                let s = problem.stats(&xi).unwrap();
                assert!(s.rss <= last_rss + 1e-10);
                last_rss = s.rss;
            }
        }
    }

    #[test]
    fn cache_is_transparent() {
        let problem = small_problem(8, 35, 5);
        for xi in InclusionVector::enumerate_all(5) {
            let cached = problem.stats(&xi).unwrap();
            let again = problem.stats(&xi).unwrap();
            let fresh = problem.stats_uncached(&xi).unwrap();
            assert_eq!(cached.rss.to_bits(), fresh.rss.to_bits());
            assert_eq!(cached.log_marginal.to_bits(), fresh.log_marginal.to_bits());
            assert_eq!(cached.d_f, fresh.d_f);
            assert_eq!(cached.rss.to_bits(), again.rss.to_bits());
        }
    }

    #[test]
    fn exchangeability_under_column_permutation() {
        let mut rng = ChaCha8Rng::seed_from_u64(13);
        let n = 24;
        let p = 4;
        let rows: Vec<Vec<f64>> = (0..n)
            .map(|_| (0..p).map(|_| rng.random::<f64>() - 0.5).collect())
            .collect();
        let y: Vec<f64> = (0..n).map(|_| rng.random::<f64>() - 0.5).collect();
        let perm = [2usize, 0, 3, 1];
        let permuted: Vec<Vec<f64>> = rows
            .iter()
            .map(|r| perm.iter().map(|&j| r[j]).collect())
            .collect();
        let prob_a =
            LinearProblem::with_default_priors(Matrix::from_rows(&rows), y.clone()).unwrap();
        let prob_b =
            LinearProblem::with_default_priors(Matrix::from_rows(&permuted), y).unwrap();
        for xi in InclusionVector::enumerate_all(p) {
            let mut bits_b = vec![false; p];
            for (new_col, &old_col) in perm.iter().enumerate() {
                bits_b[new_col] = xi.get(old_col);
            }
            let xi_b = InclusionVector::from_bits(&bits_b);
            let la = log_marginal_likelihood(&prob_a, &xi).unwrap();
            let lb = log_marginal_likelihood(&prob_b, &xi_b).unwrap();
            assert!((la - lb).abs() < 1e-9);
        }
    }

    #[test]
    fn cache_tolerates_concurrent_get_or_compute() {
        let problem = std::sync::Arc::new(small_problem(6, 30, 6));
        let states = InclusionVector::enumerate_all(6);
        let expected: Vec<f64> = states
            .iter()
            .map(|xi| problem.stats_uncached(xi).unwrap().log_marginal)
            .collect();
        let handles: Vec<_> = (0..4)
            .map(|t| {
                let problem = problem.clone();
                let states = states.clone();
                std::thread::spawn(move || {
                    let mut out = Vec::new();
                    for (i, xi) in states.iter().enumerate() {
                        if i % 4 == t || i % 3 == t % 3 {
                            out.push((i, problem.stats(xi).unwrap().log_marginal));
                        }
                    }
                    out
                })
            })
            .collect();
        for handle in handles {
            for (i, got) in handle.join().unwrap() {
                assert_eq!(got.to_bits(), expected[i].to_bits());
            }
        }
    }

    #[test]
    fn enumerated_posterior_is_proper() {
        let problem = small_problem(4, 40, 6);
        let probs = enumerate_posterior(&problem).unwrap();
        assert_eq!(probs.len(), 64);
        assert!(probs.iter().all(|&p| p >= 0.0));
        let total: f64 = probs.iter().sum();
        assert!((total - 1.0).abs() < 1e-12);
    }
}
