//! Synthetic-data generators: a correlated sparse linear design and a
//! planted-signal Dirichlet-Multinomial instance.
//!
//! Each generator draws from dedicated RNG streams of the master seed (one
//! per ingredient: design, support, coefficients, noise, ...), so changing
//! one configuration field only perturbs the draws that depend on it.
//! Generator streams start at 2^32 to stay disjoint from chain streams.

use rand_distr::{Distribution, Gamma, Poisson, StandardNormal};

use crate::error::{CoreError, Result};
use crate::inclusion::InclusionVector;
use crate::numcore::linalg::{cholesky, Matrix, SymmetricMatrix};
use crate::numcore::rng::{chain_rng, ChainRng, Rng, RngSeed};

const STREAM_BASE: u64 = 1 << 32;
const STREAM_DESIGN: u64 = STREAM_BASE;
const STREAM_SUPPORT: u64 = STREAM_BASE + 1;
const STREAM_COEF: u64 = STREAM_BASE + 2;
const STREAM_NOISE: u64 = STREAM_BASE + 3;
const STREAM_DEPTH: u64 = STREAM_BASE + 4;
const STREAM_COUNTS: u64 = STREAM_BASE + 5;

/// Standardizes every column to mean 0 and sample standard deviation 1
/// (n − 1 denominator). Constant columns are left centered and reported.
pub fn standardize_columns(x: &mut Matrix) -> Vec<usize> {
    let n = x.rows();
    let p = x.cols();
    let mut constant = Vec::new();
    for j in 0..p {
        let mean = (0..n).map(|i| x.get(i, j)).sum::<f64>() / n as f64;
        let var = (0..n).map(|i| (x.get(i, j) - mean).powi(2)).sum::<f64>() / (n as f64 - 1.0);
        let sd = var.sqrt();
        if sd == 0.0 {
            constant.push(j);
            for i in 0..n {
                x.set(i, j, 0.0);
            }
            continue;
        }
        for i in 0..n {
            x.set(i, j, (x.get(i, j) - mean) / sd);
        }
    }
    constant
}

/// Configuration for the correlated sparse linear design.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LinearSynthConfig {
    pub n: usize,
    pub p: usize,
    pub n_active: usize,
    /// Toeplitz correlation ρ^|i−j| between raw design columns.
    pub rho: f64,
    pub sigma2: f64,
    pub seed: RngSeed,
}

impl LinearSynthConfig {
    fn validate(&self) -> Result<()> {
        if self.n < 2 || self.p == 0 {
            return Err(CoreError::domain("LinearSynthConfig", "need n ≥ 2 and P ≥ 1"));
        }
        if self.n_active > self.p {
            return Err(CoreError::domain("LinearSynthConfig", "n_active exceeds P"));
        }
        if !(self.rho.abs() < 1.0) {
            return Err(CoreError::domain("LinearSynthConfig", "|rho| must be below 1"));
        }
        if !(self.sigma2 > 0.0) {
            return Err(CoreError::domain("LinearSynthConfig", "sigma2 must be positive"));
        }
        Ok(())
    }
}

/// A generated linear dataset with its planted truth.
#[derive(Debug, Clone)]
pub struct LinearDataset {
    /// Standardized n×P design.
    pub x: Matrix,
    pub y: Vec<f64>,
    pub truth: InclusionVector,
    pub intercept: f64,
    /// Planted coefficients, zero off the support.
    pub coefficients: Vec<f64>,
}

fn toeplitz_cholesky(p: usize, rho: f64) -> Result<crate::numcore::linalg::CholeskyFactor> {
    let mut cov = SymmetricMatrix::zeros(p);
    for i in 0..p {
        for j in i..p {
            cov.set(i, j, rho.powi((j - i) as i32));
        }
    }
    cholesky(&cov)
}

/// Draws a uniformly random subset of the given size (partial Fisher-Yates).
fn random_subset(p: usize, k: usize, rng: &mut ChainRng) -> Vec<usize> {
    let mut indices: Vec<usize> = (0..p).collect();
    for i in 0..k {
        let j = rng.random_range(i..p);
        indices.swap(i, j);
    }
    let mut subset = indices[..k].to_vec();
    subset.sort_unstable();
    subset
}

/// Generates rows X_i ~ MVN(0, Toeplitz(ρ)), standardizes columns, plants a
/// uniformly random active subset with N(0,1) intercept and coefficients,
/// and draws y ~ N(intercept + X_ξ β_ξ, σ² I).
pub fn gen_linear(config: &LinearSynthConfig) -> Result<LinearDataset> {
    config.validate()?;
    let LinearSynthConfig { n, p, n_active, sigma2, seed, .. } = *config;

    let chol = toeplitz_cholesky(p, config.rho)?;
    let mut design_rng = chain_rng(seed, STREAM_DESIGN);
    let mut x = Matrix::zeros(n, p);
    let mut z = vec![0.0; p];
    for i in 0..n {
        for zj in z.iter_mut() {
            *zj = StandardNormal.sample(&mut design_rng);
        }
        let row = chol.mul_vec(&z);
        x.row_mut(i).copy_from_slice(&row);
    }
    standardize_columns(&mut x);

    let mut support_rng = chain_rng(seed, STREAM_SUPPORT);
    let active = random_subset(p, n_active, &mut support_rng);
    let truth = InclusionVector::from_active_indices(p, &active);

    let mut coef_rng = chain_rng(seed, STREAM_COEF);
    let intercept: f64 = StandardNormal.sample(&mut coef_rng);
    let mut coefficients = vec![0.0; p];
    for &a in &active {
        coefficients[a] = StandardNormal.sample(&mut coef_rng);
    }

    let mut noise_rng = chain_rng(seed, STREAM_NOISE);
    let sigma = sigma2.sqrt();
    let y: Vec<f64> = (0..n)
        .map(|i| {
            let mean: f64 = intercept
                + active.iter().map(|&a| x.get(i, a) * coefficients[a]).sum::<f64>();
            let e: f64 = StandardNormal.sample(&mut noise_rng);
            mean + sigma * e
        })
        .collect();

    Ok(LinearDataset {
        x,
        y,
        truth,
        intercept,
        coefficients,
    })
}

/// Configuration for the planted Dirichlet-Multinomial instance.
#[derive(Debug, Clone, PartialEq)]
pub struct DmSynthConfig {
    pub n: usize,
    pub p: usize,
    pub categories: usize,
    /// Planted (predictor, category, coefficient) triples.
    pub associations: Vec<(usize, usize, f64)>,
    /// Covariate Toeplitz correlation, as in the linear generator.
    pub rho: f64,
    /// Sequencing depth: y_i+ = depth_base + Poisson(depth_mean).
    pub depth_base: u64,
    pub depth_mean: f64,
    pub seed: RngSeed,
}

impl DmSynthConfig {
    pub fn defaults(n: usize, p: usize, categories: usize, seed: RngSeed) -> Self {
        DmSynthConfig {
            n,
            p,
            categories,
            associations: Vec::new(),
            rho: 0.0,
            depth_base: 1000,
            depth_mean: 500.0,
            seed,
        }
    }

    fn validate(&self) -> Result<()> {
        if self.n == 0 || self.p == 0 || self.categories == 0 {
            return Err(CoreError::domain("DmSynthConfig", "n, P and J must be positive"));
        }
        for &(p, j, _) in &self.associations {
            if p >= self.p || j >= self.categories {
                return Err(CoreError::domain(
                    "DmSynthConfig",
                    format!("association ({p}, {j}) out of range"),
                ));
            }
        }
        if !(self.rho.abs() < 1.0) {
            return Err(CoreError::domain("DmSynthConfig", "|rho| must be below 1"));
        }
        if !(self.depth_mean >= 0.0) {
            return Err(CoreError::domain("DmSynthConfig", "depth_mean must be nonnegative"));
        }
        Ok(())
    }
}

/// A generated DM dataset with the planted inclusion truth.
#[derive(Debug, Clone)]
pub struct DmDataset {
    /// n×J integer counts.
    pub counts: Vec<Vec<u64>>,
    /// Standardized n×P covariates.
    pub x: Matrix,
    /// Per-category planted inclusion vectors (length P each).
    pub truth: Vec<InclusionVector>,
}

/// Generates covariates like the linear generator, maps planted coefficients
/// through the log-linear link γ_ij = exp(β₀j + Σ x_ip β_pj) with β₀ = 0,
/// then draws φ_i ~ Dirichlet(γ_i) and counts ~ Multinomial(y_i+, φ_i).
pub fn gen_dm(config: &DmSynthConfig) -> Result<DmDataset> {
    config.validate()?;
    let n = config.n;
    let p = config.p;
    let j_cats = config.categories;

    let chol = toeplitz_cholesky(p, config.rho)?;
    let mut design_rng = chain_rng(config.seed, STREAM_DESIGN);
    let mut x = Matrix::zeros(n, p);
    let mut z = vec![0.0; p];
    for i in 0..n {
        for zj in z.iter_mut() {
            *zj = StandardNormal.sample(&mut design_rng);
        }
        let row = chol.mul_vec(&z);
        x.row_mut(i).copy_from_slice(&row);
    }
    standardize_columns(&mut x);

    let mut truth: Vec<InclusionVector> = (0..j_cats).map(|_| InclusionVector::empty(p)).collect();
    let mut beta = vec![vec![0.0f64; p]; j_cats];
    for &(pred, cat, coef) in &config.associations {
        truth[cat].set(pred, true);
        beta[cat][pred] = coef;
    }

    let mut depth_rng = chain_rng(config.seed, STREAM_DEPTH);
    let depth_noise = Poisson::new(config.depth_mean.max(f64::MIN_POSITIVE))
        .map_err(|e| CoreError::domain("gen_dm", format!("bad depth distribution: {e}")))?;
    let depths: Vec<u64> = (0..n)
        .map(|_| config.depth_base + depth_noise.sample(&mut depth_rng) as u64)
        .collect();

    let mut counts_rng = chain_rng(config.seed, STREAM_COUNTS);
    let mut counts = vec![vec![0u64; j_cats]; n];
    for i in 0..n {
        // Concentration row through the link.
        let gammas: Vec<f64> = (0..j_cats)
            .map(|cat| {
                let eta: f64 = (0..p).map(|q| x.get(i, q) * beta[cat][q]).sum();
                eta.exp()
            })
            .collect();
        // Dirichlet via normalized Gamma draws.
        let mut phi: Vec<f64> = gammas
            .iter()
            .map(|&g| {
                let dist = Gamma::new(g, 1.0).expect("positive shape");
                dist.sample(&mut counts_rng)
            })
            .collect();
        let total: f64 = phi.iter().sum();
        if total <= 0.0 {
            phi = vec![1.0 / j_cats as f64; j_cats];
        } else {
            for v in &mut phi {
                *v /= total;
            }
        }
        // Multinomial via sequential conditional binomials.
        let mut remaining = depths[i];
        let mut mass_left = 1.0f64;
        for cat in 0..j_cats {
            if remaining == 0 {
                break;
            }
            if cat == j_cats - 1 {
                counts[i][cat] = remaining;
                break;
            }
            let prob = (phi[cat] / mass_left).clamp(0.0, 1.0);
            let draw = rand_distr::Binomial::new(remaining, prob)
                .expect("valid binomial")
                .sample(&mut counts_rng);
            counts[i][cat] = draw;
            remaining -= draw;
            mass_left = (mass_left - phi[cat]).max(f64::MIN_POSITIVE);
        }
    }

    Ok(DmDataset { counts, x, truth })
}
