use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Fraction of `scores` at or above `t`.
pub fn realized_rate(scores: &[f64], t: f64) -> f64 {
    scores.iter().filter(|&&s| s >= t).count() as f64 / scores.len() as f64
}

/// Smallest observed score `t` such that at most a fraction `p` of
/// `neg_scores` is `>= t`. When even the maximum is too frequent, returns the
/// next representable value above it, so nothing is flagged.
pub fn threshold_for_fpr(neg_scores: &[f64], p: f64) -> Result<f64> {
    if !(p > 0.0 && p < 1.0) {
        return Err(Error::InvalidRate(p));
    }
    if neg_scores.is_empty() {
        return Err(Error::EmptyDistribution("no negative scores for threshold".into()));
    }
    if neg_scores.iter().any(|s| s.is_nan()) {
        return Err(Error::Precondition("NaN score".into()));
    }
    let mut sorted = neg_scores.to_vec();
    sorted.sort_by(f64::total_cmp);
    let n = sorted.len();
    // Candidates ascending; the count at or above sorted[i] is n - (first index of that value).
    let mut i = 0;
    while i < n {
        let v = sorted[i];
        if (n - i) as f64 / n as f64 <= p {
            return Ok(v);
        }
        while i < n && sorted[i] == v {
            i += 1;
        }
    }
    Ok(sorted[n - 1].next_up())
}

/// Thresholds (confidence units) matched to false-positive-rate targets.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DecisionPolicy {
    pub fpr_targets: Vec<f64>,
    pub thresholds: Vec<f64>,
    /// Fingerprint of the run whose negative scores produced the thresholds.
    pub run_fingerprint: String,
}

impl DecisionPolicy {
    /// Derives one threshold per target from known-negative scores. Targets
    /// are sorted ascending, so thresholds come out non-increasing.
    pub fn from_negatives(neg_scores: &[f64], fpr_targets: &[f64], run_fingerprint: &str) -> Result<Self> {
        let mut targets = fpr_targets.to_vec();
        targets.sort_by(f64::total_cmp);
        targets.dedup();
        let thresholds = targets
            .iter()
            .map(|&p| threshold_for_fpr(neg_scores, p))
            .collect::<Result<_>>()?;
        Ok(DecisionPolicy {
            fpr_targets: targets,
            thresholds,
            run_fingerprint: run_fingerprint.to_string(),
        })
    }
}
