use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// ROC curve over every distinct score threshold, with its AUC.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RocCurve {
    /// `(fpr, tpr)` from `(0, 0)` to `(1, 1)`.
    pub points: Vec<(f64, f64)>,
    pub auc: f64,
}

impl RocCurve {
    pub fn trapezoid_area(&self) -> f64 {
        self.points
            .windows(2)
            .map(|w| (w[1].0 - w[0].0) * (w[1].1 + w[0].1) / 2.0)
            .sum()
    }
}

/// ROC/AUC where a larger score means "more likely positive".
///
/// The AUC is the Mann–Whitney statistic with half credit for ties, computed
/// from integer pair counts so that it is exact up to one final division.
pub fn roc_auc(pos_scores: &[f64], neg_scores: &[f64]) -> Result<RocCurve> {
    if pos_scores.is_empty() || neg_scores.is_empty() {
        return Err(Error::EmptyDistribution(format!(
            "roc needs both classes ({} positive, {} negative)",
            pos_scores.len(),
            neg_scores.len()
        )));
    }
    if pos_scores.iter().chain(neg_scores).any(|s| s.is_nan()) {
        return Err(Error::Precondition("NaN score".into()));
    }
    let mut neg = neg_scores.to_vec();
    neg.sort_by(f64::total_cmp);
    // Twice the Mann–Whitney U: 2 per won pair, 1 per tie.
    let mut doubled: u128 = 0;
    for &p in pos_scores {
        let below = neg.partition_point(|&x| x < p);
        let not_above = neg.partition_point(|&x| x <= p);
        doubled += 2 * below as u128 + (not_above - below) as u128;
    }
    let pairs = pos_scores.len() as u128 * neg.len() as u128;
    let auc = doubled as f64 / (2 * pairs) as f64;

    let mut labelled: Vec<(f64, bool)> = pos_scores
        .iter()
        .map(|&s| (s, true))
        .chain(neg_scores.iter().map(|&s| (s, false)))
        .collect();
    labelled.sort_by(|a, b| b.0.total_cmp(&a.0));
    let (np, nn) = (pos_scores.len() as f64, neg_scores.len() as f64);
    let mut points = vec![(0.0, 0.0)];
    let (mut tp, mut fp) = (0usize, 0usize);
    let mut i = 0;
    while i < labelled.len() {
        let threshold = labelled[i].0;
        while i < labelled.len() && labelled[i].0 == threshold {
            if labelled[i].1 {
                tp += 1;
            } else {
                fp += 1;
            }
            i += 1;
        }
        points.push((fp as f64 / nn, tp as f64 / np));
    }
    Ok(RocCurve { points, auc })
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn worked_examples() {
        assert_eq!(roc_auc(&[2.0, 3.0], &[0.0, 1.0]).unwrap().auc, 1.0);
        assert_eq!(roc_auc(&[1.0, 2.0, 2.0], &[2.0, 1.0, 2.0]).unwrap().auc, 0.5);
        assert_eq!(roc_auc(&[1.0, 3.0], &[0.0, 2.0]).unwrap().auc, 0.75);
    }

    #[test]
    fn empty_side_is_an_error() {
        assert!(roc_auc(&[], &[1.0]).is_err());
        assert!(roc_auc(&[1.0], &[]).is_err());
    }

    #[test]
    fn curve_endpoints() {
        let c = roc_auc(&[0.3, 0.9, 0.5], &[0.1, 0.5]).unwrap();
        assert_eq!(c.points.first(), Some(&(0.0, 0.0)));
        assert_eq!(c.points.last(), Some(&(1.0, 1.0)));
    }

    fn scores() -> impl Strategy<Value = Vec<f64>> {
        prop::collection::vec((0i32..20).prop_map(|k| k as f64 * 0.5), 1..30)
    }

    proptest! {
        #[test]
        fn complement(pos in scores(), neg in scores()) {
            let a = roc_auc(&pos, &neg).unwrap().auc;
            let b = roc_auc(&neg, &pos).unwrap().auc;
            prop_assert!((a + b - 1.0).abs() <= 1e-12);
        }

        #[test]
        fn trapezoid_matches_and_curve_is_monotone(pos in scores(), neg in scores()) {
            let c = roc_auc(&pos, &neg).unwrap();
            prop_assert!((c.auc - c.trapezoid_area()).abs() <= 1e-12);
            for w in c.points.windows(2) {
                prop_assert!(w[1].0 >= w[0].0 && w[1].1 >= w[0].1);
            }
        }

        #[test]
        fn shift_invariant(pos in scores(), neg in scores(), k in -8i32..8) {
            let c = k as f64 * 0.25;
            let shifted = |v: &[f64]| v.iter().map(|x| x + c).collect::<Vec<_>>();
            prop_assert_eq!(roc_auc(&pos, &neg).unwrap().auc, roc_auc(&shifted(&pos), &shifted(&neg)).unwrap().auc);
        }
    }
}
