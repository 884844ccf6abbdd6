//! Scoring and contrastive loss arithmetic.

use crate::TrainError;
use codegrain_core::linalg;

/// Dot-product matching score.
pub fn score(query: &[f64], snippet: &[f64]) -> Result<f64, TrainError> {
    if query.len() != snippet.len() {
        return Err(TrainError::DimensionMismatch {
            left: query.len(),
            right: snippet.len(),
        });
    }
    Ok(linalg::dot(query, snippet))
}

/// Best dot-product score over candidates and its index.
///
/// Ties go to the smallest index, so the innermost block of a nested
/// candidate chain wins when scores are equal.
pub fn max_sim(query: &[f64], candidates: &[&[f64]]) -> Result<(f64, usize), TrainError> {
    if candidates.is_empty() {
        return Err(TrainError::EmptyCandidates);
    }
    let mut best = (score(query, candidates[0])?, 0usize);
    for (i, c) in candidates.iter().enumerate().skip(1) {
        let s = score(query, c)?;
        if s > best.0 {
            best = (s, i);
        }
    }
    Ok(best)
}

/// Contrastive loss `-ln(e^{p/tau} / (e^{p/tau} + sum_j e^{n_j/tau}))`.
///
/// Computed as `m + ln(sum e^{z-m}) - z_pos` with `m` the max over all
/// scaled scores; the same expression the autodiff tape evaluates, so the
/// two agree bitwise.
pub fn info_nce(pos: f64, negatives: &[f64], tau: f64) -> f64 {
    assert!(tau > 0.0, "temperature must be positive");
    let mut z = Vec::with_capacity(negatives.len() + 1);
    z.push(pos / tau);
    z.extend(negatives.iter().map(|s| s / tau));
    let m = z.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let exps: Vec<f64> = z.iter().map(|v| (v - m).exp()).collect();
    let sum: f64 = exps.iter().sum();
    m + sum.ln() - z[0]
}

/// Per-granularity loss means for one batch or epoch.
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct GranularityLosses {
    pub function: f64,
    pub block: f64,
    pub statement: f64,
}

impl GranularityLosses {
    /// Combined objective: function + alpha * block + beta * statement.
    pub fn total(&self, alpha: f64, beta: f64) -> f64 {
        self.function + alpha * self.block + beta * self.statement
    }
}
