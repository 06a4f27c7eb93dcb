use serde::{Deserialize, Serialize};

pub const CONFIDENCE_BINS: usize = 10;

/// One 0.1-wide confidence interval.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConfidenceBin {
    pub interval: String,
    pub lo: f64,
    pub hi: f64,
    pub count: u64,
}

/// Index of the interval holding `c`: `[0, 0.1]`, `(0.1, 0.2]`, …, `(0.9, 1]`.
pub fn confidence_bin(c: f64) -> usize {
    (1..CONFIDENCE_BINS)
        .find(|&k| c <= k as f64 / 10.0)
        .map_or(CONFIDENCE_BINS - 1, |k| k - 1)
}

pub fn render_confidence_bins(confidences: &[f64]) -> Vec<ConfidenceBin> {
    let mut counts = [0u64; CONFIDENCE_BINS];
    for &c in confidences {
        counts[confidence_bin(c)] += 1;
    }
    counts
        .iter()
        .enumerate()
        .map(|(k, &count)| {
            let (lo, hi) = (k as f64 / 10.0, (k + 1) as f64 / 10.0);
            let open = if k == 0 { '[' } else { '(' };
            ConfidenceBin {
                interval: format!("{open}{lo:.1},{hi:.1}]"),
                lo,
                hi,
                count,
            }
        })
        .collect()
}
