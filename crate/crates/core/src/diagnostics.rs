//! Post-hoc chain analysis: posterior inclusion probabilities, Bayesian FDR
//! selection, Hamming jump histograms and autocorrelation. Everything here
//! is a pure function of stored traces, so recomputation is idempotent.

use crate::error::{CoreError, Result};
use crate::linsampler::ChainTrace;

/// Per-indicator posterior inclusion frequencies.
#[derive(Debug, Clone, PartialEq)]
pub struct PipTable {
    pub probabilities: Vec<f64>,
}

/// Mean of each packed indicator over rows `burn_in..`, for any trace whose
/// configurations are stored words-per-row packed.
pub fn pip_from_packed(
    num_indicators: usize,
    words_per_row: usize,
    packed: &[u64],
    burn_in: usize,
) -> Result<PipTable> {
    if words_per_row == 0 || packed.len() % words_per_row != 0 {
        return Err(CoreError::domain("pip", "packed length not a multiple of row width"));
    }
    let rows = packed.len() / words_per_row;
    if burn_in >= rows {
        return Err(CoreError::domain(
            "pip",
            format!("burn_in {burn_in} not below trace length {rows}"),
        ));
    }
    let mut counts = vec![0u64; num_indicators];
    for r in burn_in..rows {
        let row = &packed[r * words_per_row..(r + 1) * words_per_row];
        for (i, count) in counts.iter_mut().enumerate() {
            if (row[i / 64] >> (i % 64)) & 1 == 1 {
                *count += 1;
            }
        }
    }
    let denom = (rows - burn_in) as f64;
    Ok(PipTable {
        probabilities: counts.into_iter().map(|c| c as f64 / denom).collect(),
    })
}

/// Posterior inclusion probabilities of a linear-sampler trace.
pub fn pip(trace: &ChainTrace, burn_in: usize) -> Result<PipTable> {
    pip_from_packed(trace.num_predictors, trace.words_per_config, &trace.configs, burn_in)
}

/// Bayesian FDR selection: rank PIPs descending and keep the largest prefix
/// whose mean (1 − PIP) stays at or below α. Returns the selected indicator
/// indices and the smallest selected PIP (1.0 when nothing is selectable).
pub fn bayes_fdr_threshold(pips: &[f64], alpha: f64) -> Result<(Vec<usize>, f64)> {
    if !(alpha > 0.0 && alpha < 1.0) {
        return Err(CoreError::domain("bayes_fdr_threshold", format!("alpha {alpha} outside (0, 1)")));
    }
    let mut order: Vec<usize> = (0..pips.len()).collect();
    order.sort_by(|&a, &b| pips[b].partial_cmp(&pips[a]).unwrap().then(a.cmp(&b)));
    let mut best_len = 0;
    let mut cum = 0.0;
    for (k, &idx) in order.iter().enumerate() {
        cum += 1.0 - pips[idx];
        if cum / (k + 1) as f64 <= alpha {
            best_len = k + 1;
        }
    }
    let mut selected: Vec<usize> = order[..best_len].to_vec();
    let threshold = selected
        .iter()
        .map(|&i| pips[i])
        .fold(f64::INFINITY, f64::min);
    selected.sort_unstable();
    Ok((selected, if best_len == 0 { 1.0 } else { threshold }))
}

/// Tally of per-iteration jump distances into bins {0, 1, 2, 3+}.
pub fn hamming_histogram(trace: &ChainTrace) -> [u64; 4] {
    let mut bins = [0u64; 4];
    for &d in &trace.hamming_jump {
        bins[(d as usize).min(3)] += 1;
    }
    bins
}

/// Autocorrelation function of a scalar chain functional.
#[derive(Debug, Clone)]
pub struct Acf {
    /// Values at lags 0..=max_lag; lag 0 is 1 for non-degenerate series.
    pub values: Vec<f64>,
    /// Set when the series was constant and the ACF is undefined.
    pub degenerate: bool,
}

/// Standard biased ACF estimator, normalized by the lag-0 autocovariance.
pub fn autocorrelation(series: &[f64], max_lag: usize) -> Result<Acf> {
    if series.len() <= max_lag {
        return Err(CoreError::domain(
            "autocorrelation",
            format!("series length {} must exceed max_lag {max_lag}", series.len()),
        ));
    }
    let n = series.len();
    let mean = series.iter().sum::<f64>() / n as f64;
    let c0: f64 = series.iter().map(|x| (x - mean) * (x - mean)).sum();
    if c0 == 0.0 {
        let mut values = vec![0.0; max_lag + 1];
        values[0] = 1.0;
        return Ok(Acf { values, degenerate: true });
    }
    let mut values = Vec::with_capacity(max_lag + 1);
    for k in 0..=max_lag {
        let ck: f64 = (k..n).map(|t| (series[t] - mean) * (series[t - k] - mean)).sum();
        values.push(ck / c0);
    }
    Ok(Acf { values, degenerate: false })
}
