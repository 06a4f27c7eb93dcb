use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use super::confidence::{
    calibrate, classify, confidence_score, with_reference_fpr, CalibrationResult, Classification, ConfidenceSet,
};
use super::gaps::{compute_gaps, GapRecord, GapTransform};
use super::phases::{build_baseline, build_reference, distribution, simulate, StageDistributions};
use crate::corpus::{Sample, Split};
use crate::error::{Error, Result, StageContext};
use crate::fingerprint::Fingerprint;
use crate::oracle::{dataset_fingerprint, LossOracle, ModelSummary, Stage};
use crate::report::{render_confidence_bins, render_histogram, ConfidenceBin, HistogramRange, HistogramSpec};
use crate::stats::{roc_auc, DecisionPolicy, Summary};

pub const REPORT_VERSION: u32 = 1;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AuditConfig {
    /// Tokens per sample used for loss evaluation; `None` keeps full samples.
    #[serde(default)]
    pub eval_token_len: Option<usize>,
    #[serde(default = "default_fpr_targets")]
    pub fpr_targets: Vec<f64>,
    #[serde(default)]
    pub gap_transform: GapTransform,
    #[serde(default = "default_histogram_bins")]
    pub histogram_bins: usize,
}

fn default_fpr_targets() -> Vec<f64> {
    vec![0.05, 0.10, 0.15, 0.20, 0.25]
}

fn default_histogram_bins() -> usize {
    50
}

impl Default for AuditConfig {
    fn default() -> Self {
        AuditConfig {
            eval_token_len: None,
            fpr_targets: default_fpr_targets(),
            gap_transform: GapTransform::Raw,
            histogram_bins: default_histogram_bins(),
        }
    }
}

impl AuditConfig {
    pub fn validate(&self) -> Result<()> {
        if self.fpr_targets.is_empty() {
            return Err(Error::Config("at least one FPR target is required".into()));
        }
        if let Some(&p) = self.fpr_targets.iter().find(|p| !(**p > 0.0 && **p < 1.0)) {
            return Err(Error::InvalidRate(p));
        }
        if self.histogram_bins == 0 {
            return Err(Error::Config("histogram_bins must be at least 1".into()));
        }
        if matches!(self.eval_token_len, Some(k) if k < 2) {
            return Err(Error::Config("eval_token_len must be at least 2".into()));
        }
        Ok(())
    }

    pub fn fingerprint(&self) -> String {
        let mut fp = Fingerprint::new("audit-config");
        fp.u64(self.eval_token_len.map_or(0, |k| k as u64));
        for p in &self.fpr_targets {
            fp.f64(*p);
        }
        fp.str(match self.gap_transform {
            GapTransform::Raw => "raw",
            GapTransform::SignedLog => "signed_log",
        })
        .u64(self.histogram_bins as u64);
        fp.hex()
    }
}

/// The four audit splits plus the vanilla model's background data.
#[derive(Debug, Clone, Default)]
pub struct AuditInputs {
    /// Pretraining data for the built-in vanilla model; ignored by external oracles.
    pub background: Vec<Sample>,
    pub baseline: Vec<Sample>,
    pub unlearned1: Vec<Sample>,
    pub target: Vec<Sample>,
    pub unlearned2: Vec<Sample>,
    /// Seen/unseen labels for target samples, by sample id.
    pub ground_truth: Option<BTreeMap<String, bool>>,
}

impl AuditInputs {
    /// Groups samples by split. Spare samples become the background, along
    /// with every target sample whose document is in `planted`. With
    /// `seen_docs`, each target sample is labelled by its document.
    pub fn from_samples(samples: Vec<Sample>, planted: &[String], seen_docs: Option<&[String]>) -> Self {
        let mut inputs = AuditInputs::default();
        for s in samples {
            let bucket = match s.split {
                Split::Spare => &mut inputs.background,
                Split::Baseline => &mut inputs.baseline,
                Split::Unlearned1 => &mut inputs.unlearned1,
                Split::Target => {
                    if planted.contains(&s.doc_id) {
                        inputs.background.push(s.clone());
                    }
                    &mut inputs.target
                }
                Split::Unlearned2 => &mut inputs.unlearned2,
            };
            bucket.push(s);
        }
        for v in [
            &mut inputs.background,
            &mut inputs.baseline,
            &mut inputs.unlearned1,
            &mut inputs.target,
            &mut inputs.unlearned2,
        ] {
            v.sort_by(|a, b| a.sample_id.cmp(&b.sample_id));
        }
        inputs.ground_truth = seen_docs.map(|seen| {
            inputs
                .target
                .iter()
                .map(|s| (s.sample_id.clone(), seen.contains(&s.doc_id)))
                .collect()
        });
        inputs
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScoredSample {
    pub sample_id: String,
    pub doc_id: String,
    pub gap: f64,
    pub confidence: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub seen: Option<bool>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AuditReport {
    pub version: u32,
    pub oracle: String,
    pub oracle_fingerprint: String,
    pub config: AuditConfig,
    pub config_fingerprint: String,
    pub run_fingerprint: String,
    /// One entry per stage, in pipeline order.
    pub models: Vec<ModelSummary>,
    pub calibration: CalibrationResult,
    pub distributions: StageDistributions,
    pub summaries: BTreeMap<String, Summary>,
    pub histograms: BTreeMap<String, HistogramSpec>,
    pub baseline_gaps: Vec<GapRecord>,
    pub targets: Vec<ScoredSample>,
    pub unlearned2: Vec<ScoredSample>,
    pub policy: DecisionPolicy,
    pub classifications: Vec<Classification>,
    pub confidence_bins: Vec<ConfidenceBin>,
    /// Confidence versus ground truth, when both classes are labelled.
    pub auc: Option<f64>,
    pub warnings: Vec<String>,
}

impl AuditReport {
    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)? + "\n")
    }

    pub fn model(&self, stage: Stage) -> Option<&ModelSummary> {
        self.models.iter().find(|m| m.stage == stage)
    }

    /// Structural lineage check: every stage extends its parent by one entry.
    pub fn verify_lineage(&self) -> Result<()> {
        for m in &self.models {
            if let Some(parent) = m.stage.parent() {
                let p = self
                    .model(parent)
                    .ok_or_else(|| Error::Precondition(format!("report lacks a {parent} model")))?;
                if !m.extends(p) {
                    return Err(Error::Precondition(format!(
                        "{} lineage does not extend {parent} lineage",
                        m.stage
                    )));
                }
                if m.lineage.last().map(|e| e.stage) != Some(m.stage) {
                    return Err(Error::Precondition(format!(
                        "{} lineage ends in another stage",
                        m.stage
                    )));
                }
            }
        }
        Ok(())
    }
}

fn run_fingerprint(oracle: &dyn LossOracle, inputs: &AuditInputs, cfg: &AuditConfig) -> String {
    let mut fp = Fingerprint::new("audit-run");
    fp.u64(REPORT_VERSION as u64)
        .str(&cfg.fingerprint())
        .str(oracle.name())
        .str(&oracle.fingerprint());
    for split in [
        &inputs.background,
        &inputs.baseline,
        &inputs.unlearned1,
        &inputs.target,
        &inputs.unlearned2,
    ] {
        fp.str(&dataset_fingerprint(split));
    }
    if let Some(truth) = &inputs.ground_truth {
        for (id, seen) in truth {
            fp.str(id).u64(*seen as u64);
        }
    }
    fp.hex()
}

fn scored(records: &[GapRecord], cal: &CalibrationResult, truth: Option<&BTreeMap<String, bool>>) -> Vec<ScoredSample> {
    records
        .iter()
        .map(|r| ScoredSample {
            sample_id: r.sample_id.clone(),
            doc_id: r.doc_id.clone(),
            gap: r.gap,
            confidence: confidence_score(r.gap, cal),
            seen: truth.and_then(|t| t.get(&r.sample_id).copied()),
        })
        .collect()
}

/// Preparation, simulation and confidence calculation, end to end.
pub fn audit(oracle: &dyn LossOracle, inputs: &AuditInputs, cfg: &AuditConfig) -> Result<AuditReport> {
    cfg.validate().stage("config")?;
    let run_fp = run_fingerprint(oracle, inputs, cfg);
    let (len, transform) = (cfg.eval_token_len, cfg.gap_transform);

    let (vanilla, baseline, reference, baseline_seen, baseline_unseen) = (|| {
        let vanilla = oracle.vanilla(&inputs.background)?;
        let baseline = build_baseline(oracle, &vanilla, &inputs.baseline)?;
        let reference = build_reference(oracle, &baseline, &inputs.baseline, &inputs.unlearned1)?;
        let seen = compute_gaps(oracle, &baseline, &reference, &inputs.baseline, len, transform)?;
        let unseen = compute_gaps(oracle, &baseline, &reference, &inputs.unlearned1, len, transform)?;
        Ok((vanilla, baseline, reference, seen, unseen))
    })()
    .stage("preparation")?;

    let sim = simulate(
        oracle,
        &vanilla,
        &reference,
        &inputs.target,
        &inputs.unlearned2,
        len,
        transform,
    )
    .stage("simulation")?;

    let (distributions, calibration) = (|| {
        let d = StageDistributions {
            baseline_seen: distribution("baseline_seen", &baseline_seen)?,
            baseline_unseen: distribution("baseline_unseen", &baseline_unseen)?,
            ref_tuned_target: distribution("ref_tuned_target", &sim.ref_tuned_target)?,
            ref_tuned_unseen: distribution("ref_tuned_unseen", &sim.ref_tuned_unseen)?,
            vanilla_tuned_target: distribution("vanilla_tuned_target", &sim.vanilla_tuned_target)?,
            vanilla_tuned_unseen: distribution("vanilla_tuned_unseen", &sim.vanilla_tuned_unseen)?,
        };
        let c = calibrate(&d)?;
        Ok((d, c))
    })()
    .stage("calibration")?;

    let truth = inputs.ground_truth.as_ref();
    let (targets, unlearned2, policy, classifications, auc) = (|| {
        let targets = scored(&sim.vanilla_tuned_target, &calibration, truth);
        let unlearned2 = scored(&sim.vanilla_tuned_unseen, &calibration, None);
        let negatives: Vec<f64> = unlearned2.iter().map(|s| s.confidence).collect();
        let policy = DecisionPolicy::from_negatives(&negatives, &cfg.fpr_targets, &run_fp)?;
        let set = ConfidenceSet {
            run_fingerprint: run_fp.clone(),
            scores: targets.iter().map(|s| (s.sample_id.clone(), s.confidence)).collect(),
        };
        let classifications = with_reference_fpr(classify(&set, &policy, truth)?, &negatives);
        let (pos, neg): (Vec<&ScoredSample>, Vec<&ScoredSample>) = targets.iter().partition(|s| s.seen == Some(true));
        let auc = if truth.is_some() && !pos.is_empty() && !neg.is_empty() {
            let p: Vec<f64> = pos.iter().map(|s| s.confidence).collect();
            let n: Vec<f64> = neg.iter().map(|s| s.confidence).collect();
            Some(roc_auc(&p, &n)?.auc)
        } else {
            None
        };
        Ok((targets, unlearned2, policy, classifications, auc))
    })()
    .stage("confidence")?;

    let (summaries, histograms) = (|| {
        let mut named: Vec<(&str, &crate::stats::EmpiricalDistribution)> = distributions.named().to_vec();
        named.push(("calibrated_unseen", &calibration.calibrated_unseen));
        let mut summaries = BTreeMap::new();
        let mut histograms = BTreeMap::new();
        for (name, d) in named {
            summaries.insert(name.to_string(), d.summary());
            histograms.insert(
                name.to_string(),
                render_histogram(d, cfg.histogram_bins, HistogramRange::Auto)?,
            );
        }
        Ok::<_, Error>((summaries, histograms))
    })()
    .stage("report")?;

    let confidences: Vec<f64> = targets.iter().map(|s| s.confidence).collect();
    let mut baseline_gaps = baseline_seen;
    baseline_gaps.extend(baseline_unseen);
    baseline_gaps.sort_by(|a, b| a.sample_id.cmp(&b.sample_id));

    let report = AuditReport {
        version: REPORT_VERSION,
        oracle: oracle.name().to_string(),
        oracle_fingerprint: oracle.fingerprint(),
        config: cfg.clone(),
        config_fingerprint: cfg.fingerprint(),
        run_fingerprint: run_fp,
        models: [
            &vanilla,
            &baseline,
            &reference,
            &sim.reference_tuned,
            &sim.vanilla_tuned,
        ]
        .iter()
        .map(|m| m.summary())
        .collect(),
        calibration,
        distributions,
        summaries,
        histograms,
        baseline_gaps,
        targets,
        unlearned2,
        policy,
        classifications,
        confidence_bins: render_confidence_bins(&confidences),
        auc,
        warnings: sim.warnings,
    };
    report.verify_lineage().stage("report")?;
    Ok(report)
}
