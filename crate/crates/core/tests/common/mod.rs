//! Shared helpers for the integration tests: adaptive-Simpson quadrature
//! oracles with a tail substitution, the χ²/F densities written directly
//! from their formulas, and exact transition-matrix builders for the
//! detailed-balance checks.

#![allow(dead_code)]

use simprop_core::conjlinear::{log_marginal_likelihood, DissimKind, LinearProblem, ModelPrior, NigPrior};
use simprop_core::inclusion::InclusionVector;
use simprop_core::localmove::{build_swap_proposal, swap_log_alpha, DependencyGraph};
use simprop_core::numcore::linalg::{cholesky, dot, Matrix, SymmetricMatrix};
use simprop_core::numcore::special::log_gamma;
use simprop_core::proposal::{build_proposal, flip_log_alpha};

/// Recursive adaptive Simpson on [a, b].
pub fn adaptive_simpson<F: Fn(f64) -> f64>(f: &F, a: f64, b: f64, tol: f64) -> f64 {
    fn simpson<F: Fn(f64) -> f64>(f: &F, a: f64, fa: f64, b: f64, fb: f64) -> (f64, f64, f64) {
        let m = 0.5 * (a + b);
        let fm = f(m);
        ((b - a) / 6.0 * (fa + 4.0 * fm + fb), m, fm)
    }
    fn recurse<F: Fn(f64) -> f64>(
        f: &F,
        a: f64,
        fa: f64,
        b: f64,
        fb: f64,
        whole: f64,
        m: f64,
        fm: f64,
        tol: f64,
        depth: usize,
    ) -> f64 {
        let (left, lm, flm) = simpson(f, a, fa, m, fm);
        let (right, rm, frm) = simpson(f, m, fm, b, fb);
        let delta = left + right - whole;
        if depth == 0 || delta.abs() <= 15.0 * tol {
            return left + right + delta / 15.0;
        }
        recurse(f, a, fa, m, fm, left, lm, flm, 0.5 * tol, depth - 1)
            + recurse(f, m, fm, b, fb, right, rm, frm, 0.5 * tol, depth - 1)
    }
    let fa = f(a);
    let fb = f(b);
    let (whole, m, fm) = simpson(f, a, fa, b, fb);
    recurse(f, a, fa, b, fb, whole, m, fm, tol, 60)
}

/// ∫_x^∞ density(t) dt via the substitution t = x + s/(1−s), which maps the
/// tail onto [0, 1) with Jacobian (1−s)^{-2}.
pub fn upper_tail_integral<F: Fn(f64) -> f64>(density: &F, x: f64, tol: f64) -> f64 {
    let transformed = |s: f64| {
        if s >= 1.0 {
            return 0.0;
        }
        let one_minus = 1.0 - s;
        let t = x + s / one_minus;
        if !t.is_finite() {
            return 0.0;
        }
        let v = density(t) / (one_minus * one_minus);
        if v.is_finite() {
            v
        } else {
            0.0
        }
    };
    adaptive_simpson(&transformed, 0.0, 1.0 - 1e-12, tol)
}

/// χ²_k density.
pub fn chi2_density(k: u32) -> impl Fn(f64) -> f64 {
    let half_k = 0.5 * k as f64;
    let log_norm = half_k * 2f64.ln() + log_gamma(half_k).unwrap();
    move |t: f64| {
        if t <= 0.0 {
            return 0.0;
        }
        ((half_k - 1.0) * t.ln() - 0.5 * t - log_norm).exp()
    }
}

/// F_{d1,d2} density.
pub fn f_density(d1: u32, d2: u32) -> impl Fn(f64) -> f64 {
    let a = 0.5 * d1 as f64;
    let b = 0.5 * d2 as f64;
    let ratio = d1 as f64 / d2 as f64;
    let log_norm =
        log_gamma(a + b).unwrap() - log_gamma(a).unwrap() - log_gamma(b).unwrap() + a * ratio.ln();
    move |t: f64| {
        if t <= 0.0 {
            return 0.0;
        }
        (log_norm + (a - 1.0) * t.ln() - (a + b) * (1.0 + ratio * t).ln()).exp()
    }
}

/// Exact flip-kernel transition matrix: proposal probabilities times
/// acceptance, rejection mass on the diagonal.
pub fn flip_transition_matrix(problem: &LinearProblem, dissim: DissimKind, lambda: f64) -> Vec<Vec<f64>> {
    let p = problem.num_predictors();
    let states = InclusionVector::enumerate_all(p);
    let mut t = vec![vec![0.0; states.len()]; states.len()];
    for (s, xi) in states.iter().enumerate() {
        let proposal = build_proposal(problem, xi, &dissim, lambda).unwrap();
        let mut stay = 1.0;
        for (m, member) in proposal.neighborhood.members.iter().enumerate() {
            let log_alpha = flip_log_alpha(problem, xi, member, &dissim, lambda).unwrap();
            let alpha = log_alpha.exp().min(1.0);
            let code = member.words()[0] as usize;
            let mass = proposal.probabilities[m] * alpha;
            t[s][code] += mass;
            stay -= mass;
        }
        t[s][s] += stay;
    }
    t
}

/// Exact swap-kernel transition matrix; states without swappable components
/// are absorbing for this kernel.
pub fn swap_transition_matrix(
    problem: &LinearProblem,
    graph: &DependencyGraph,
    dissim: DissimKind,
    lambda_move: f64,
) -> Vec<Vec<f64>> {
    let p = problem.num_predictors();
    let states = InclusionVector::enumerate_all(p);
    let mut t = vec![vec![0.0; states.len()]; states.len()];
    for (s, xi) in states.iter().enumerate() {
        match build_swap_proposal(problem, xi, graph, &dissim, lambda_move).unwrap() {
            None => t[s][s] = 1.0,
            Some(proposal) => {
                let mut stay = 1.0;
                for (c, cand) in proposal.candidates.iter().enumerate() {
                    let log_alpha =
                        swap_log_alpha(problem, xi, cand, graph, &dissim, lambda_move).unwrap();
                    let alpha = log_alpha.exp().min(1.0);
                    let code = cand.configuration.words()[0] as usize;
                    let mass = proposal.probabilities[c] * alpha;
                    t[s][code] += mass;
                    stay -= mass;
                }
                t[s][s] += stay;
            }
        }
    }
    t
}

pub fn max_detailed_balance_violation(pi: &[f64], t: &[Vec<f64>]) -> f64 {
    let mut worst: f64 = 0.0;
    for s in 0..pi.len() {
        for sp in 0..pi.len() {
            worst = worst.max((pi[s] * t[s][sp] - pi[sp] * t[sp][s]).abs());
        }
    }
    worst
}

pub fn stationarity_violation(pi: &[f64], t: &[Vec<f64>]) -> f64 {
    let mut worst: f64 = 0.0;
    for sp in 0..pi.len() {
        let mut mass = 0.0;
        for s in 0..pi.len() {
            mass += pi[s] * t[s][sp];
        }
        worst = worst.max((mass - pi[sp]).abs());
    }
    worst
}


/// The NIG marginal of y is a multivariate Student-t; evaluating that
/// density is an independent route to the same number.
pub fn mvt_identity_log_marginal(
    x_cols: &[Vec<f64>],
    y: &[f64],
    lambda0_diag: f64,
    a0: f64,
    b0: f64,
) -> f64 {
    let n = y.len();
    let k = x_cols.len();
    // S = (b0/a0) (I + X Λ0^{-1} Xᵀ), location X μ0 = 0.
    let mut s = SymmetricMatrix::identity(n);
    for i in 0..n {
        for j in i..n {
            let mut acc = 0.0;
            for col in x_cols.iter().take(k) {
                acc += col[i] * col[j] / lambda0_diag;
            }
            s.set(i, j, s.get(i, j) + acc);
        }
    }
    s.scale_in_place(b0 / a0);
    let chol = cholesky(&s).unwrap();
    let z = chol.solve_lower(y);
    let quad = dot(&z, &z);
    let nu = 2.0 * a0;
    let nf = n as f64;
    log_gamma(0.5 * (nu + nf)).unwrap()
        - log_gamma(0.5 * nu).unwrap()
        - 0.5 * nf * (nu * std::f64::consts::PI).ln()
        - 0.5 * chol.log_det()
        - 0.5 * (nu + nf) * (1.0 + quad / nu).ln()
}


/// The n = 3 intercept-only NIG case: returns (closed form, 2-D quadrature).
pub fn nig_quadrature_oracle_n3() -> (f64, f64) {
    let y = [0.0, 0.0, 0.0];
    let (lambda0, a0, b0) = (1.0_f64, 1.0_f64, 1.0_f64);
    let n = 3.0;
    let integrand = |beta0: f64, sigma2: f64| {
        let rss: f64 = y.iter().map(|v| (v - beta0) * (v - beta0)).sum();
        let log_lik = -0.5 * n * (2.0 * std::f64::consts::PI * sigma2).ln() - 0.5 * rss / sigma2;
        let log_prior_beta = -0.5 * (2.0 * std::f64::consts::PI * sigma2 / lambda0).ln()
            - 0.5 * lambda0 * beta0 * beta0 / sigma2;
        let log_prior_sigma =
            a0 * b0.ln() - log_gamma(a0).unwrap() - (a0 + 1.0) * sigma2.ln() - b0 / sigma2;
        (log_lik + log_prior_beta + log_prior_sigma).exp()
    };
    let outer = |v: f64| {
        let sigma2 = v.exp();
        let sigma = sigma2.sqrt();
        let inner =
            adaptive_simpson(&|b: f64| integrand(b, sigma2), -40.0 * sigma, 40.0 * sigma, 1e-12);
        inner * sigma2
    };
    let integral = adaptive_simpson(&outer, -25.0, 12.0, 1e-11);
    let oracle = integral.ln();

    let problem = LinearProblem::new(
        Matrix::zeros(3, 1),
        y.to_vec(),
        NigPrior {
            mu0: vec![0.0; 2],
            lambda0: SymmetricMatrix::identity(2),
            a0,
            b0,
        },
        ModelPrior::default(),
    )
    .unwrap();
    let got = log_marginal_likelihood(&problem, &InclusionVector::empty(1)).unwrap();
    (got, oracle)
}
