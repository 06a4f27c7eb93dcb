use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use super::phases::StageDistributions;
use crate::error::{Error, Result};
use crate::stats::{
    fit_normal, normal_survival, realized_rate, shift_distribution, wasserstein_1d, DecisionPolicy,
    EmpiricalDistribution, NormalFit,
};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CalibrationResult {
    /// W1 between the reference-tuned and vanilla-tuned unseen gaps.
    pub distance: f64,
    pub signed_shift: f64,
    /// Baseline unseen gaps moved by `signed_shift`; the benchmark.
    pub calibrated_unseen: EmpiricalDistribution,
    pub fit: NormalFit,
}

/// Moves the baseline unseen-gap distribution into the vanilla-tuned frame.
pub fn calibrate(dists: &StageDistributions) -> Result<CalibrationResult> {
    let distance = wasserstein_1d(&dists.ref_tuned_unseen, &dists.vanilla_tuned_unseen);
    let direction = dists.vanilla_tuned_unseen.mean() - dists.ref_tuned_unseen.mean();
    let signed_shift = if direction < 0.0 { -distance } else { distance };
    let calibrated_unseen = shift_distribution(&dists.baseline_unseen, signed_shift);
    let fit = fit_normal(calibrated_unseen.values())?;
    Ok(CalibrationResult {
        distance,
        signed_shift,
        calibrated_unseen,
        fit,
    })
}

/// Probability that an unseen sample shows a gap at least as large as `gap`.
pub fn confidence_score(gap: f64, calibration: &CalibrationResult) -> f64 {
    normal_survival(gap, &calibration.fit).clamp(0.0, 1.0)
}

/// Confidences of one run, keyed by sample id.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConfidenceSet {
    pub run_fingerprint: String,
    pub scores: Vec<(String, f64)>,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Metrics {
    pub tp: usize,
    pub fp: usize,
    pub tn: usize,
    #[serde(rename = "fn")]
    pub fn_: usize,
    pub accuracy: f64,
    /// `None` when there are no positives.
    pub tpr: Option<f64>,
    pub fnr: Option<f64>,
    /// `None` when nothing is positive in either truth or prediction.
    pub f1: Option<f64>,
}

impl Metrics {
    pub fn from_counts(tp: usize, fp: usize, tn: usize, fn_: usize) -> Self {
        let total = tp + fp + tn + fn_;
        let positives = tp + fn_;
        let ratio = |a: usize, b: usize| (b > 0).then(|| a as f64 / b as f64);
        Metrics {
            tp,
            fp,
            tn,
            fn_,
            accuracy: if total > 0 {
                (tp + tn) as f64 / total as f64
            } else {
                0.0
            },
            tpr: ratio(tp, positives),
            fnr: ratio(fn_, positives),
            f1: ratio(2 * tp, 2 * tp + fp + fn_),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Classification {
    pub fpr_target: f64,
    pub threshold: f64,
    /// Ids predicted seen, sorted.
    pub seen_ids: Vec<String>,
    /// Realized false-positive rate on the scores the threshold came from.
    pub reference_fpr: Option<f64>,
    pub metrics: Option<Metrics>,
}

/// Applies every threshold of `policy`: seen iff confidence ≥ t.
pub fn classify(
    confidences: &ConfidenceSet,
    policy: &DecisionPolicy,
    ground_truth: Option<&BTreeMap<String, bool>>,
) -> Result<Vec<Classification>> {
    if confidences.run_fingerprint != policy.run_fingerprint {
        return Err(Error::PolicyMismatch {
            policy: policy.run_fingerprint.clone(),
            scores: confidences.run_fingerprint.clone(),
        });
    }
    if let Some(truth) = ground_truth {
        if let Some((id, _)) = confidences.scores.iter().find(|(id, _)| !truth.contains_key(id)) {
            return Err(Error::Precondition(format!("no ground-truth label for sample {id}")));
        }
    }
    Ok(policy
        .fpr_targets
        .iter()
        .zip(&policy.thresholds)
        .map(|(&fpr_target, &threshold)| {
            let mut seen_ids: Vec<String> = confidences
                .scores
                .iter()
                .filter(|(_, c)| *c >= threshold)
                .map(|(id, _)| id.clone())
                .collect();
            seen_ids.sort();
            let metrics = ground_truth.map(|truth| {
                let (mut tp, mut fp, mut tn, mut fn_) = (0, 0, 0, 0);
                for (id, c) in &confidences.scores {
                    match (*c >= threshold, truth[id]) {
                        (true, true) => tp += 1,
                        (true, false) => fp += 1,
                        (false, false) => tn += 1,
                        (false, true) => fn_ += 1,
                    }
                }
                Metrics::from_counts(tp, fp, tn, fn_)
            });
            Classification {
                fpr_target,
                threshold,
                seen_ids,
                reference_fpr: None,
                metrics,
            }
        })
        .collect())
}

pub(crate) fn with_reference_fpr(mut cs: Vec<Classification>, negatives: &[f64]) -> Vec<Classification> {
    for c in &mut cs {
        c.reference_fpr = Some(realized_rate(negatives, c.threshold));
    }
    cs
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn dist(v: &[f64]) -> EmpiricalDistribution {
        EmpiricalDistribution::new(v.to_vec()).unwrap()
    }

    fn dists(ref_unseen: &[f64], van_unseen: &[f64]) -> StageDistributions {
        StageDistributions {
            baseline_seen: dist(&[0.1, 0.2]),
            baseline_unseen: dist(&[0.3, 0.5, 0.9]),
            ref_tuned_target: dist(&[0.0, 0.1]),
            ref_tuned_unseen: dist(ref_unseen),
            vanilla_tuned_target: dist(&[0.0, 0.1]),
            vanilla_tuned_unseen: dist(van_unseen),
        }
    }

    #[test]
    fn identical_frames_need_no_correction() {
        let c = calibrate(&dists(&[0.2, 0.4], &[0.2, 0.4])).unwrap();
        assert_eq!(c.distance, 0.0);
        assert_eq!(c.calibrated_unseen, dist(&[0.3, 0.5, 0.9]));
    }

    #[test]
    fn translation_gives_signed_shift() {
        let c = calibrate(&dists(&[0.2, 0.4, 1.0], &[0.7, 0.9, 1.5])).unwrap();
        assert!((c.distance - 0.5).abs() < 1e-12);
        assert!((c.signed_shift - 0.5).abs() < 1e-12);
        let c = calibrate(&dists(&[0.7, 0.9, 1.5], &[0.2, 0.4, 1.0])).unwrap();
        assert!((c.signed_shift + 0.5).abs() < 1e-12);
        assert!((c.calibrated_unseen.min() - (0.3 - 0.5)).abs() < 1e-12);
    }

    fn cal(mu: f64, sigma: f64) -> CalibrationResult {
        CalibrationResult {
            distance: 0.0,
            signed_shift: 0.0,
            calibrated_unseen: dist(&[mu]),
            fit: NormalFit {
                mu,
                sigma,
                degenerate: false,
            },
        }
    }

    #[test]
    fn confidence_reference_points() {
        let c = cal(0.3, 0.1);
        assert!((confidence_score(0.3, &c) - 0.5).abs() < 1e-15);
        assert!(confidence_score(0.3 - 0.6, &c) >= 1.0 - 1e-9);
        assert!((confidence_score(0.4, &c) - 0.158655).abs() < 1e-6);
    }

    fn policy(thresholds: &[f64], run: &str) -> DecisionPolicy {
        DecisionPolicy {
            fpr_targets: (1..=thresholds.len()).map(|i| i as f64 * 0.05).collect(),
            thresholds: thresholds.to_vec(),
            run_fingerprint: run.into(),
        }
    }

    #[test]
    fn all_ones_are_seen() {
        let set = ConfidenceSet {
            run_fingerprint: "r".into(),
            scores: vec![("a".into(), 1.0), ("b".into(), 1.0)],
        };
        let out = classify(&set, &policy(&[1.0, 0.5], "r"), None).unwrap();
        assert!(out.iter().all(|c| c.seen_ids.len() == 2 && c.metrics.is_none()));
    }

    #[test]
    fn foreign_policy_is_rejected() {
        let set = ConfidenceSet {
            run_fingerprint: "r1".into(),
            scores: vec![("a".into(), 0.4)],
        };
        assert!(matches!(
            classify(&set, &policy(&[0.5], "r2"), None),
            Err(Error::PolicyMismatch { .. })
        ));
    }

    #[test]
    fn metrics_by_hand() {
        let m = Metrics::from_counts(3, 1, 4, 2);
        assert_eq!(m.accuracy, 0.7);
        assert_eq!(m.tpr, Some(0.6));
        assert_eq!(m.fnr, Some(0.4));
        assert!((m.f1.unwrap() - 6.0 / 9.0).abs() < 1e-15);
        assert_eq!(Metrics::from_counts(0, 1, 1, 0).tpr, None);
    }

    proptest! {
        #[test]
        fn confidence_decreases_in_gap(mu in -1.0f64..1.0, sigma in 0.01f64..1.0, a in -2.0f64..2.0, d in 1e-3f64..1.0) {
            let c = cal(mu, sigma);
            let (lo, hi) = (confidence_score(a, &c), confidence_score(a + d, &c));
            prop_assert!((0.0..=1.0).contains(&lo));
            prop_assert!(lo >= hi);
            if lo > 1e-300 && lo < 1.0 - 1e-12 { prop_assert!(lo > hi); }
        }

        #[test]
        fn metric_identities_and_nesting(
            scores in proptest::collection::vec((0.0f64..1.0, any::<bool>()), 1..40),
            mut ts in proptest::collection::vec(0.0f64..1.0, 1..5),
        ) {
            ts.sort_by(|a, b| b.total_cmp(a));
            let set = ConfidenceSet {
                run_fingerprint: "r".into(),
                scores: scores.iter().enumerate().map(|(i, (c, _))| (format!("s{i:03}"), *c)).collect(),
            };
            let truth: BTreeMap<String, bool> =
                scores.iter().enumerate().map(|(i, (_, l))| (format!("s{i:03}"), *l)).collect();
            let out = classify(&set, &policy(&ts, "r"), Some(&truth)).unwrap();
            for w in out.windows(2) {
                prop_assert!(w[0].seen_ids.iter().all(|id| w[1].seen_ids.contains(id)));
            }
            for c in &out {
                let m = c.metrics.unwrap();
                prop_assert_eq!(m.tp + m.fp + m.tn + m.fn_, scores.len());
                prop_assert!((m.accuracy - (m.tp + m.tn) as f64 / scores.len() as f64).abs() <= 1e-12);
                if let (Some(tpr), Some(fnr)) = (m.tpr, m.fnr) {
                    prop_assert!((tpr + fnr - 1.0).abs() <= 1e-12);
                }
                if m.tp > 0 {
                    let p = m.tp as f64 / (m.tp + m.fp) as f64;
                    let r = m.tp as f64 / (m.tp + m.fn_) as f64;
                    prop_assert!((m.f1.unwrap() - 2.0 * p * r / (p + r)).abs() <= 1e-12);
                }
            }
        }
    }
}
