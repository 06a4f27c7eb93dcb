use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::stats::EmpiricalDistribution;

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum HistogramRange {
    /// `[min, max]` of the data.
    #[default]
    Auto,
    Fixed {
        lo: f64,
        hi: f64,
    },
}

/// Equal-width bin counts over `[lo, hi]`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HistogramSpec {
    pub bin_count: usize,
    pub range: HistogramRange,
    pub lo: f64,
    pub hi: f64,
    pub counts: Vec<u64>,
}

impl HistogramSpec {
    pub fn total(&self) -> u64 {
        self.counts.iter().sum()
    }

    pub fn edges(&self, bin: usize) -> (f64, f64) {
        let w = (self.hi - self.lo) / self.bin_count as f64;
        let hi = if bin + 1 == self.bin_count {
            self.hi
        } else {
            self.lo + w * (bin + 1) as f64
        };
        (self.lo + w * bin as f64, hi)
    }
}

/// Half-open bins `[a, b)`, except that `hi` belongs to the last bin. Values
/// outside a fixed range are counted in the nearest edge bin, so mass is
/// always conserved. A zero-width range is widened around its value.
pub fn render_histogram(
    dist: &EmpiricalDistribution,
    bin_count: usize,
    range: HistogramRange,
) -> Result<HistogramSpec> {
    if bin_count == 0 {
        return Err(Error::Config("histogram needs at least one bin".into()));
    }
    let (mut lo, mut hi) = match range {
        HistogramRange::Auto => (dist.min(), dist.max()),
        HistogramRange::Fixed { lo, hi } => {
            if !(lo.is_finite() && hi.is_finite() && lo <= hi) {
                return Err(Error::Config(format!("invalid histogram range [{lo}, {hi}]")));
            }
            (lo, hi)
        }
    };
    if hi - lo <= 0.0 {
        let eps = (lo.abs() * 1e-9).max(1e-9);
        lo -= eps;
        hi += eps;
    }
    let width = hi - lo;
    let mut counts = vec![0u64; bin_count];
    for &v in dist.values() {
        let idx = ((v - lo) / width * bin_count as f64).floor();
        let idx = if idx.is_nan() || idx < 0.0 {
            0
        } else {
            (idx as usize).min(bin_count - 1)
        };
        counts[idx] += 1;
    }
    Ok(HistogramSpec {
        bin_count,
        range,
        lo,
        hi,
        counts,
    })
}
