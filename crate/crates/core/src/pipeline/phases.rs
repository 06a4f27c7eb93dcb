use std::collections::BTreeSet;

use serde::{Deserialize, Serialize};

use super::gaps::{compute_gaps, gap_values, GapRecord, GapTransform};
use crate::corpus::{overlapping_docs, Sample};
use crate::error::{Error, Result};
use crate::oracle::{LossOracle, ModelSnapshot, Stage};
use crate::stats::EmpiricalDistribution;

/// The six gap distributions the calibration draws on.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StageDistributions {
    /// Baseline-split gaps, baseline → reference.
    pub baseline_seen: EmpiricalDistribution,
    /// Unlearned-I gaps, baseline → reference.
    pub baseline_unseen: EmpiricalDistribution,
    pub ref_tuned_target: EmpiricalDistribution,
    /// Unlearned-II gaps, reference → reference-tuned.
    pub ref_tuned_unseen: EmpiricalDistribution,
    pub vanilla_tuned_target: EmpiricalDistribution,
    /// Unlearned-II gaps, vanilla → vanilla-tuned.
    pub vanilla_tuned_unseen: EmpiricalDistribution,
}

impl StageDistributions {
    pub fn named(&self) -> [(&'static str, &EmpiricalDistribution); 6] {
        [
            ("baseline_seen", &self.baseline_seen),
            ("baseline_unseen", &self.baseline_unseen),
            ("ref_tuned_target", &self.ref_tuned_target),
            ("ref_tuned_unseen", &self.ref_tuned_unseen),
            ("vanilla_tuned_target", &self.vanilla_tuned_target),
            ("vanilla_tuned_unseen", &self.vanilla_tuned_unseen),
        ]
    }
}

pub(crate) fn distribution(name: &str, records: &[GapRecord]) -> Result<EmpiricalDistribution> {
    if records.is_empty() {
        return Err(Error::EmptyDistribution(format!("{name}: no gaps")));
    }
    EmpiricalDistribution::new(gap_values(records))
}

fn expect_stage(snapshot: &ModelSnapshot, stage: Stage) -> Result<()> {
    if snapshot.stage != stage {
        return Err(Error::Precondition(format!(
            "expected a {stage} snapshot, got {} ({})",
            snapshot.stage, snapshot.model_id
        )));
    }
    Ok(())
}

fn disjoint(a: &[Sample], b: &[Sample]) -> Result<()> {
    let doc_ids = overlapping_docs(a, b);
    if doc_ids.is_empty() {
        Ok(())
    } else {
        Err(Error::OverlappingSplits { doc_ids })
    }
}

fn union(a: &[Sample], b: &[Sample]) -> Vec<Sample> {
    let mut all: Vec<Sample> = a.iter().chain(b).cloned().collect();
    all.sort_by(|x, y| x.sample_id.cmp(&y.sample_id));
    all
}

pub fn build_baseline(oracle: &dyn LossOracle, vanilla: &ModelSnapshot, baseline: &[Sample]) -> Result<ModelSnapshot> {
    expect_stage(vanilla, Stage::Vanilla)?;
    oracle.fine_tune(vanilla, baseline, oracle.finetune_passes(), Stage::Baseline)
}

/// Fine-tunes the baseline model on baseline ∪ unlearned-I, so baseline
/// content ends up with two exposures and unlearned-I with one.
pub fn build_reference(
    oracle: &dyn LossOracle,
    baseline_model: &ModelSnapshot,
    baseline: &[Sample],
    unlearned1: &[Sample],
) -> Result<ModelSnapshot> {
    expect_stage(baseline_model, Stage::Baseline)?;
    disjoint(baseline, unlearned1)?;
    oracle.fine_tune(
        baseline_model,
        &union(baseline, unlearned1),
        oracle.finetune_passes(),
        Stage::Reference,
    )
}

#[derive(Debug, Clone)]
pub struct SimulationOutcome {
    pub vanilla_tuned: ModelSnapshot,
    pub reference_tuned: ModelSnapshot,
    pub ref_tuned_target: Vec<GapRecord>,
    pub ref_tuned_unseen: Vec<GapRecord>,
    pub vanilla_tuned_target: Vec<GapRecord>,
    pub vanilla_tuned_unseen: Vec<GapRecord>,
    pub warnings: Vec<String>,
}

fn doc_count(samples: &[Sample]) -> usize {
    samples.iter().map(|s| s.doc_id.as_str()).collect::<BTreeSet<_>>().len()
}

/// Fine-tunes both the reference and the vanilla model on target ∪
/// unlearned-II and measures both splits under both pairs.
pub fn simulate(
    oracle: &dyn LossOracle,
    vanilla: &ModelSnapshot,
    reference: &ModelSnapshot,
    target: &[Sample],
    unlearned2: &[Sample],
    eval_token_len: Option<usize>,
    transform: GapTransform,
) -> Result<SimulationOutcome> {
    expect_stage(vanilla, Stage::Vanilla)?;
    expect_stage(reference, Stage::Reference)?;
    disjoint(target, unlearned2)?;
    let mut warnings = Vec::new();
    let (t, u) = (doc_count(target), doc_count(unlearned2));
    if t != u {
        warnings.push(format!("target has {t} documents but unlearned2 has {u}"));
    }
    let mix = union(target, unlearned2);
    let passes = oracle.finetune_passes();
    let reference_tuned = oracle.fine_tune(reference, &mix, passes, Stage::ReferenceTuned)?;
    let vanilla_tuned = oracle.fine_tune(vanilla, &mix, passes, Stage::VanillaTuned)?;
    let gaps = |pre, post, samples| compute_gaps(oracle, pre, post, samples, eval_token_len, transform);
    Ok(SimulationOutcome {
        ref_tuned_target: gaps(reference, &reference_tuned, target)?,
        ref_tuned_unseen: gaps(reference, &reference_tuned, unlearned2)?,
        vanilla_tuned_target: gaps(vanilla, &vanilla_tuned, target)?,
        vanilla_tuned_unseen: gaps(vanilla, &vanilla_tuned, unlearned2)?,
        vanilla_tuned,
        reference_tuned,
        warnings,
    })
}
