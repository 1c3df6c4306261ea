//! Windowed Robbins-Monro adaptation of the informativeness exponent λ,
//! plus the same-schedule scale adaptation for random-walk proposals.
//!
//! λ is adjusted in log space at the end of each window of W iterations
//! inside the adaptation interval: the update moves along the direction of
//! the previous step if the window acceptance rate improved and reverses
//! otherwise, with diminishing steps d_k = c·k^{-δ}. Once the interval ends
//! λ freezes for good, so the post-adaptation chain is a plain MH sampler.

use crate::error::{CoreError, Result};
use crate::numcore::linalg::SymmetricMatrix;

/// Configuration of the windowed adaptation schedule.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AdaptConfig {
    /// Window size W in iterations.
    pub window: usize,
    /// Step scale c > 0.
    pub scale_c: f64,
    /// Step decay δ ∈ (0.5, 1], giving Σ d_k = ∞ and Σ d_k² < ∞.
    pub decay: f64,
    pub lambda_min: f64,
    pub lambda_max: f64,
    /// Adaptation runs for iterations t with t_start ≤ t < t_end (1-based);
    /// windows straddling t_end are dropped.
    pub t_start: usize,
    pub t_end: usize,
}

impl AdaptConfig {
    /// Defaults: W = 25, c = 1, δ = 0.75, λ ∈ [0.05, 10], adaptation from
    /// iteration 100 until three quarters of the run.
    pub fn default_for(total_iterations: usize) -> Self {
        AdaptConfig {
            window: 25,
            scale_c: 1.0,
            decay: 0.75,
            lambda_min: 0.05,
            lambda_max: 10.0,
            t_start: 100,
            t_end: total_iterations * 3 / 4,
        }
    }

    /// No adaptation at all: λ stays wherever it was initialized.
    pub fn disabled() -> Self {
        AdaptConfig {
            window: 25,
            scale_c: 1.0,
            decay: 0.75,
            lambda_min: f64::MIN_POSITIVE,
            lambda_max: f64::MAX,
            t_start: 0,
            t_end: 0,
        }
    }

    pub fn validate(&self, total_iterations: usize) -> Result<()> {
        if self.window == 0 {
            return Err(CoreError::domain("AdaptConfig", "window must be positive"));
        }
        if !(self.scale_c > 0.0) {
            return Err(CoreError::domain("AdaptConfig", "scale c must be positive"));
        }
        if !(self.decay > 0.5 && self.decay <= 1.0) {
            return Err(CoreError::domain("AdaptConfig", "decay must lie in (0.5, 1]"));
        }
        if !(self.lambda_min > 0.0 && self.lambda_min < self.lambda_max) {
            return Err(CoreError::domain("AdaptConfig", "need 0 < lambda_min < lambda_max"));
        }
        if self.t_end > total_iterations + 1 {
            return Err(CoreError::domain(
                "AdaptConfig",
                format!("t_end {} exceeds total iterations {total_iterations}", self.t_end),
            ));
        }
        Ok(())
    }
}

/// Sign with the documented convention sgn(0) = +1, which fixes the first
/// adaptable epoch and exact ties so runs stay reproducible.
#[inline]
pub fn sgn_convention(x: f64) -> f64 {
    if x < 0.0 {
        -1.0
    } else {
        1.0
    }
}

/// Mutable adaptation bookkeeping for one chain (or one category).
#[derive(Debug, Clone)]
pub struct AdaptState {
    lambda: f64,
    log_lambda: f64,
    log_lambda_prev: f64,
    epoch: usize,
    alpha_prev: f64,
    n_acc: usize,
    t_window: usize,
    frozen: bool,
    /// λ value at the end of each completed epoch.
    lambda_history: Vec<f64>,
}

impl AdaptState {
    pub fn new(initial_lambda: f64) -> Self {
        assert!(initial_lambda > 0.0, "initial lambda must be positive");
        let log_lambda = initial_lambda.ln();
        AdaptState {
            lambda: initial_lambda,
            log_lambda,
            log_lambda_prev: log_lambda,
            epoch: 0,
            alpha_prev: 0.0,
            n_acc: 0,
            t_window: 0,
            frozen: false,
            lambda_history: Vec::new(),
        }
    }

    #[inline]
    pub fn lambda(&self) -> f64 {
        self.lambda
    }

    #[inline]
    pub fn is_frozen(&self) -> bool {
        self.frozen
    }

    #[inline]
    pub fn epoch(&self) -> usize {
        self.epoch
    }

    pub fn lambda_history(&self) -> &[f64] {
        &self.lambda_history
    }

    /// Records the acceptance flag of iteration `t` (1-based) and applies
    /// the Robbins-Monro update at window boundaries inside the adaptation
    /// interval. Epoch 1 only records its rate; updates need two previous
    /// rates, so they start at epoch 2.
    pub fn record_step(&mut self, config: &AdaptConfig, t: usize, accepted: bool) {
        if self.frozen {
            return;
        }
        if t >= config.t_end {
            self.frozen = true;
            return;
        }
        if t < config.t_start {
            return;
        }
        self.n_acc += usize::from(accepted);
        self.t_window += 1;
        if self.t_window < config.window {
            return;
        }

        self.epoch += 1;
        let alpha = self.n_acc as f64 / config.window as f64;
        if self.epoch > 1 {
            let d_k = config.scale_c * (self.epoch as f64).powf(-config.decay);
            let delta_alpha = alpha - self.alpha_prev;
            let direction = sgn_convention(self.log_lambda - self.log_lambda_prev);
            let mut new_log = self.log_lambda + d_k * delta_alpha * direction;
            new_log = new_log.clamp(config.lambda_min.ln(), config.lambda_max.ln());
            self.log_lambda_prev = self.log_lambda;
            self.log_lambda = new_log;
            self.lambda = new_log.exp();
        }
        self.alpha_prev = alpha;
        self.lambda_history.push(self.lambda);
        self.n_acc = 0;
        self.t_window = 0;
    }
}

/// Robbins-Monro adaptation of a random-walk proposal scale toward a target
/// acceptance rate: the scale matrix is multiplied by exp(d_k (α − target))
/// window by window, then frozen after burn-in.
#[derive(Debug, Clone)]
pub struct RwScaleAdapter {
    scale_c: f64,
    decay: f64,
    target: f64,
    epoch: usize,
    frozen: bool,
}

impl RwScaleAdapter {
    /// The default target 0.234 is the classical multivariate random-walk
    /// optimum.
    pub const DEFAULT_TARGET: f64 = 0.234;

    pub fn new(scale_c: f64, decay: f64, target: f64) -> Self {
        RwScaleAdapter {
            scale_c,
            decay,
            target,
            epoch: 0,
            frozen: false,
        }
    }

    pub fn freeze(&mut self) {
        self.frozen = true;
    }

    #[inline]
    pub fn is_frozen(&self) -> bool {
        self.frozen
    }

    /// Applies one window update in place; no-op once frozen.
    pub fn record_window(&mut self, sigma: &mut SymmetricMatrix, window_rate: f64) {
        if self.frozen {
            return;
        }
        self.epoch += 1;
        let d_k = self.scale_c * (self.epoch as f64).powf(-self.decay);
        sigma.scale_in_place((d_k * (window_rate - self.target)).exp());
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::numcore::linalg::cholesky;
    use crate::numcore::mvn::mvn_sample;
    use crate::numcore::rng::{chain_rng, Rng, RngSeed};

    fn config_for_tests() -> AdaptConfig {
        AdaptConfig {
            window: 25,
            scale_c: 1.0,
            decay: 0.75,
            lambda_min: 0.05,
            lambda_max: 10.0,
            t_start: 1,
            t_end: 1_000_000,
        }
    }

    fn feed_window(state: &mut AdaptState, config: &AdaptConfig, t: &mut usize, rate: f64) {
        let accepts = (rate * config.window as f64).round() as usize;
        for i in 0..config.window {
            state.record_step(config, *t, i < accepts);
            *t += 1;
        }
    }

    #[test]
    fn sgn_convention_cases() {
        assert_eq!(sgn_convention(0.3), 1.0);
        assert_eq!(sgn_convention(-0.3), -1.0);
        assert_eq!(sgn_convention(0.0), 1.0);
    }

    #[test]
    fn zero_delta_alpha_leaves_lambda_unchanged() {
        let config = config_for_tests();
        let mut state = AdaptState::new(0.7);
        let mut t = 1;
        feed_window(&mut state, &config, &mut t, 0.4);
        feed_window(&mut state, &config, &mut t, 0.4);
        assert!((state.lambda() - 0.7).abs() < 1e-15);
    }

    #[test]
    fn second_epoch_update_direct_substitution() {
        // k = 2, c = 1, δ = 0.75, α₁ = 0.2, α₂ = 0.3, previous step zero
        // (sgn → +1): Δ log λ = 2^{-0.75} · 0.1. Window 10 keeps both rates
        // exactly representable as acceptance counts.
        let mut config = config_for_tests();
        config.window = 10;
        let mut state = AdaptState::new(1.0);
        let mut t = 1;
        feed_window(&mut state, &config, &mut t, 0.2);
        feed_window(&mut state, &config, &mut t, 0.3);
        let expected = (2f64.powf(-0.75) * 0.1).exp();
        assert!(
            (state.lambda() - expected).abs() < 1e-12,
            "{} vs {expected}",
            state.lambda()
        );
        let delta = state.lambda().ln();
        assert!((delta - 0.059_460_355_750_136_05).abs() < 1e-12);
    }

    /// Hand-stepped reference: a literal transcription of the windowed
    /// update rule, kept independent of AdaptState's internals.
    fn reference_trajectory(lambda0: f64, rates: &[f64], config: &AdaptConfig) -> Vec<f64> {
        let mut out = Vec::new();
        let mut log_curr = lambda0.ln();
        let mut log_prev = log_curr;
        let mut alpha_prev = 0.0;
        for (i, &alpha) in rates.iter().enumerate() {
            let k = i + 1;
            if k > 1 {
                let d_k = config.scale_c * (k as f64).powf(-config.decay);
                let sgn = if log_curr - log_prev < 0.0 { -1.0 } else { 1.0 };
                let mut new_log = log_curr + d_k * (alpha - alpha_prev) * sgn;
                new_log = new_log.clamp(config.lambda_min.ln(), config.lambda_max.ln());
                log_prev = log_curr;
                log_curr = new_log;
            }
            alpha_prev = alpha;
            out.push(log_curr.exp());
        }
        out
    }

    #[test]
    fn ten_window_trajectory_matches_reference() {
        let config = config_for_tests();
        // Rates in steps of 1/25 so feed_window reproduces them exactly.
        let rates = [0.20, 0.28, 0.36, 0.32, 0.40, 0.44, 0.36, 0.24, 0.28, 0.32];
        let mut state = AdaptState::new(0.7);
        let mut t = 1;
        for &r in &rates {
            feed_window(&mut state, &config, &mut t, r);
        }
        let reference = reference_trajectory(0.7, &rates, &config);
        assert_eq!(state.lambda_history().len(), reference.len());
        for (got, want) in state.lambda_history().iter().zip(&reference) {
            assert!((got - want).abs() < 1e-14, "{got} vs {want}");
        }
    }

    #[test]
    fn bounds_respected_and_update_magnitude_capped() {
        let mut config = config_for_tests();
        config.lambda_min = 0.5;
        config.lambda_max = 2.0;
        let mut state = AdaptState::new(1.9);
        let mut t = 1;
        let rates = [1.0, 0.0, 1.0, 0.0, 1.0, 1.0, 0.0];
        let mut prev_log = state.lambda().ln();
        for (i, &r) in rates.iter().enumerate() {
            feed_window(&mut state, &config, &mut t, r);
            let log_now = state.lambda().ln();
            assert!(state.lambda() >= 0.5 - 1e-12 && state.lambda() <= 2.0 + 1e-12);
            let k = i + 1;
            if k > 1 {
                let d_k = (k as f64).powf(-0.75);
                assert!((log_now - prev_log).abs() <= d_k + 1e-12);
            }
            prev_log = log_now;
        }
    }

    #[test]
    fn freezes_at_t_end_and_stays_constant() {
        let mut config = config_for_tests();
        config.t_start = 1;
        config.t_end = 101; // exactly four full windows
        let mut state = AdaptState::new(0.7);
        let mut t = 1;
        for &r in &[0.2, 0.6, 0.1, 0.9] {
            feed_window(&mut state, &config, &mut t, r);
        }
        let lambda_at_freeze = state.lambda();
        assert!(!state.is_frozen());
        for i in 0..500 {
            state.record_step(&config, t + i, i % 2 == 0);
        }
        assert!(state.is_frozen());
        assert_eq!(state.lambda(), lambda_at_freeze);
        assert_eq!(state.epoch(), 4);
    }

    #[test]
    fn partial_window_before_t_end_is_dropped() {
        let mut config = config_for_tests();
        config.t_start = 1;
        config.t_end = 40; // one full window (25) plus a 14-iteration stub
        let mut state = AdaptState::new(0.7);
        for t in 1..80 {
            state.record_step(&config, t, true);
        }
        assert_eq!(state.epoch(), 1);
        assert!((state.lambda() - 0.7).abs() < 1e-15);
    }

    #[test]
    fn hill_climb_approaches_unimodal_argmax() {
        // Deterministic unimodal (tent) response in log λ, noiseless windows.
        // A perturbed first window seeds the finite-difference direction (at
        // exactly Δα = 0 the update rule stays put by construction). After
        // the first direction reversal the distance to the argmax must not
        // increase beyond the W-quantization of the rates.
        let config = AdaptConfig {
            window: 1000,
            scale_c: 8.0,
            decay: 0.75,
            lambda_min: 0.01,
            lambda_max: 100.0,
            t_start: 1,
            t_end: usize::MAX,
        };
        let argmax = 0.3f64; // in log-λ space
        let response = |log_lambda: f64| (0.6 - 0.3 * (log_lambda - argmax).abs()).max(0.05);
        let mut state = AdaptState::new((-1.2f64).exp());
        let initial_dist = (state.lambda().ln() - argmax).abs();
        let mut t = 1;
        let mut dists = Vec::new();
        let mut dirs = Vec::new();
        let mut prev_log = state.lambda().ln();
        for epoch in 0..50 {
            let rate = if epoch == 0 {
                response(state.lambda().ln()) - 0.08
            } else {
                response(state.lambda().ln())
            };
            feed_window(&mut state, &config, &mut t, rate);
            let log_now = state.lambda().ln();
            dirs.push((log_now - prev_log).signum());
            dists.push((log_now - argmax).abs());
            prev_log = log_now;
        }
        let first_reversal = dirs
            .windows(2)
            .position(|w| w[0] != 0.0 && w[1] != 0.0 && w[0] != w[1]);
        if let Some(idx) = first_reversal {
            let slack = 2.0 * config.scale_c / config.window as f64;
            for w in dists[idx + 1..].windows(2) {
                assert!(w[1] <= w[0] + slack, "distance increased after reversal: {w:?}");
            }
        }
        let final_dist = dists.last().unwrap();
        assert!(
            *final_dist < 0.5 * initial_dist,
            "did not approach the argmax: initial {initial_dist}, final {final_dist}, trajectory {dists:?}"
        );
    }

    #[test]
    fn rw_scale_fixed_point_and_direct_substitution() {
        let mut adapter = RwScaleAdapter::new(1.0, 0.75, 0.234);
        let mut sigma = SymmetricMatrix::scaled_identity(2, 0.5);
        adapter.record_window(&mut sigma, 0.234);
        assert!((sigma.get(0, 0) - 0.5).abs() < 1e-15);
        // α = 1 inflates by exp(d_2 · 0.766).
        adapter.record_window(&mut sigma, 1.0);
        let expected = 0.5 * (2f64.powf(-0.75) * 0.766).exp();
        assert!((sigma.get(0, 0) - expected).abs() < 1e-12);
        adapter.freeze();
        adapter.record_window(&mut sigma, 1.0);
        assert!((sigma.get(0, 0) - expected).abs() < 1e-12);
    }

    #[test]
    fn rw_scale_converges_to_target_on_gaussian() {
        // Random-walk MH on a standard normal in 3 dimensions with window
        // adaptation: long-run acceptance lands at 0.234 ± 0.05.
        let dim = 3;
        let mut sigma = SymmetricMatrix::scaled_identity(dim, 4.0);
        let mut adapter = RwScaleAdapter::new(1.0, 0.75, RwScaleAdapter::DEFAULT_TARGET);
        let mut rng = chain_rng(RngSeed(123), 0);
        let mut x = vec![0.0; dim];
        let mut log_post = 0.0;
        let window = 25;
        let adapt_iters = 30_000;
        let measure_iters = 20_000;
        let mut window_acc = 0usize;
        let mut measured_acc = 0usize;
        for t in 0..adapt_iters + measure_iters {
            let chol = cholesky(&sigma).unwrap();
            let proposal = mvn_sample(&x, &chol, &mut rng).unwrap();
            let lp: f64 = -0.5 * proposal.iter().map(|v| v * v).sum::<f64>();
            let accept = rng.random::<f64>().ln() < lp - log_post;
            if accept {
                x = proposal;
                log_post = lp;
            }
            if t < adapt_iters {
                window_acc += usize::from(accept);
                if (t + 1) % window == 0 {
                    adapter.record_window(&mut sigma, window_acc as f64 / window as f64);
                    window_acc = 0;
                }
            } else {
                if !adapter.is_frozen() {
                    adapter.freeze();
                }
                measured_acc += usize::from(accept);
            }
        }
        let rate = measured_acc as f64 / measure_iters as f64;
        assert!(
            (rate - 0.234).abs() < 0.05,
            "long-run acceptance {rate} not within 0.05 of 0.234"
        );
    }
}
