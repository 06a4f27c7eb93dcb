use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::gaps::{compute_gaps, GapTransform};
use crate::corpus::{overlapping_docs, sorted_by_id, Sample};
use crate::error::{Error, Result, StageContext};
use crate::fingerprint::Fingerprint;
use crate::oracle::{dataset_fingerprint, BuiltinOracle, LossOracle, ModelSnapshot, Stage, TinyLmConfig};
use crate::stats::roc_auc;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModelVariant {
    pub name: String,
    pub model: TinyLmConfig,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct StudyConfig {
    #[serde(default = "default_repeats")]
    pub repeats: Vec<u32>,
    #[serde(default = "default_eval_lengths")]
    pub eval_lengths: Vec<usize>,
    /// Size of the fixed learned subset the loss curve is measured on.
    #[serde(default = "default_curve_samples")]
    pub curve_samples: usize,
    pub variants: Vec<ModelVariant>,
}

fn default_repeats() -> Vec<u32> {
    vec![1, 2, 3]
}

fn default_eval_lengths() -> Vec<usize> {
    (50..=100).step_by(10).collect()
}

fn default_curve_samples() -> usize {
    50
}

impl StudyConfig {
    pub fn with_variants(variants: Vec<ModelVariant>) -> Self {
        StudyConfig {
            repeats: default_repeats(),
            eval_lengths: default_eval_lengths(),
            curve_samples: default_curve_samples(),
            variants,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.variants.is_empty() {
            return Err(Error::Config("the study needs at least one model variant".into()));
        }
        if self.repeats.is_empty() || self.repeats.contains(&0) {
            return Err(Error::Config("repeat counts must be non-empty and at least 1".into()));
        }
        if self.eval_lengths.is_empty() || self.eval_lengths.iter().any(|&k| k < 2) {
            return Err(Error::Config("eval lengths must be non-empty and at least 2".into()));
        }
        if self.curve_samples == 0 {
            return Err(Error::Config("curve_samples must be at least 1".into()));
        }
        let mut names: Vec<&str> = self.variants.iter().map(|v| v.name.as_str()).collect();
        names.sort();
        if names.windows(2).any(|w| w[0] == w[1]) {
            return Err(Error::Config("variant names must be unique".into()));
        }
        for v in &self.variants {
            v.model.validate()?;
        }
        Ok(())
    }

    pub fn fingerprint(&self) -> String {
        let mut fp = Fingerprint::new("study-config");
        for r in &self.repeats {
            fp.u64(*r as u64);
        }
        fp.str("|");
        for k in &self.eval_lengths {
            fp.u64(*k as u64);
        }
        fp.u64(self.curve_samples as u64);
        for v in &self.variants {
            fp.str(&v.name).str(&v.model.fingerprint());
        }
        fp.hex()
    }
}

#[derive(Debug, Clone, Default)]
pub struct StudyInputs {
    pub background: Vec<Sample>,
    /// Fine-tuned on `repeats` times before the reference step.
    pub learned: Vec<Sample>,
    /// Seen only in the reference step.
    pub unlearned: Vec<Sample>,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LossPoint {
    pub repeats: u32,
    pub mean_loss: f64,
    /// Decrease from the previous repeat count.
    pub loss_change: Option<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AucCell {
    pub repeats: u32,
    pub eval_len: usize,
    pub auc: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VariantReport {
    pub name: String,
    pub model: TinyLmConfig,
    pub vanilla_model_id: String,
    pub loss_curve: Vec<LossPoint>,
    pub auc_grid: Vec<AucCell>,
}

impl VariantReport {
    pub fn auc(&self, repeats: u32, eval_len: usize) -> Option<f64> {
        self.auc_grid
            .iter()
            .find(|c| c.repeats == repeats && c.eval_len == eval_len)
            .map(|c| c.auc)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StudyReport {
    pub version: u32,
    pub config: StudyConfig,
    pub config_fingerprint: String,
    pub inputs_fingerprint: String,
    pub variants: Vec<VariantReport>,
}

impl StudyReport {
    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)? + "\n")
    }
}

fn mean_loss(oracle: &dyn LossOracle, m: &ModelSnapshot, samples: &[Sample]) -> Result<f64> {
    let losses = oracle.sample_losses(m, samples)?;
    Ok(losses.iter().sum::<f64>() / losses.len() as f64)
}

fn run_variant(cfg: &StudyConfig, variant: &ModelVariant, inputs: &StudyInputs) -> Result<VariantReport> {
    let oracle = BuiltinOracle::new(variant.model)?;
    let curve_set: Vec<Sample> = sorted_by_id(&inputs.learned)
        .into_iter()
        .take(cfg.curve_samples)
        .cloned()
        .collect();
    let max_r = *cfg.repeats.iter().max().expect("validated");

    let vanilla = oracle.vanilla(&inputs.background)?;
    let mut chain = vec![vanilla.clone()];
    let mut loss_curve = vec![LossPoint {
        repeats: 0,
        mean_loss: mean_loss(&oracle, &vanilla, &curve_set)?,
        loss_change: None,
    }];
    for r in 1..=max_r {
        let prev = chain.last().expect("non-empty");
        let next = oracle.fine_tune(prev, &inputs.learned, 1, Stage::Baseline)?;
        let loss = mean_loss(&oracle, &next, &curve_set)?;
        let before = loss_curve.last().expect("non-empty").mean_loss;
        loss_curve.push(LossPoint {
            repeats: r,
            mean_loss: loss,
            loss_change: Some(before - loss),
        });
        chain.push(next);
    }

    let mut mix: Vec<Sample> = inputs.learned.iter().chain(&inputs.unlearned).cloned().collect();
    mix.sort_by(|a, b| a.sample_id.cmp(&b.sample_id));
    let cells: Vec<Vec<AucCell>> = cfg
        .repeats
        .par_iter()
        .map(|&r| {
            let target = &chain[r as usize];
            let reference = oracle.fine_tune(target, &mix, 1, Stage::Reference)?;
            cfg.eval_lengths
                .iter()
                .map(|&k| {
                    let learned =
                        compute_gaps(&oracle, target, &reference, &inputs.learned, Some(k), GapTransform::Raw)?;
                    let unlearned = compute_gaps(
                        &oracle,
                        target,
                        &reference,
                        &inputs.unlearned,
                        Some(k),
                        GapTransform::Raw,
                    )?;
                    // Smaller gaps mean more prior exposure.
                    let pos: Vec<f64> = learned.iter().map(|g| -g.gap).collect();
                    let neg: Vec<f64> = unlearned.iter().map(|g| -g.gap).collect();
                    Ok(AucCell {
                        repeats: r,
                        eval_len: k,
                        auc: roc_auc(&pos, &neg)?.auc,
                    })
                })
                .collect()
        })
        .collect::<Result<_>>()?;

    Ok(VariantReport {
        name: variant.name.clone(),
        model: variant.model,
        vanilla_model_id: vanilla.model_id,
        loss_curve,
        auc_grid: cells.into_iter().flatten().collect(),
    })
}

/// Loss curve over repeated exposure and the seen-more-often versus
/// seen-once AUC grid, for every model variant.
pub fn characteristic_study(cfg: &StudyConfig, inputs: &StudyInputs) -> Result<StudyReport> {
    cfg.validate().stage("config")?;
    if inputs.learned.is_empty() || inputs.unlearned.is_empty() {
        return Err(Error::Precondition(
            "the study needs learned and unlearned samples".into(),
        ))
        .stage("config");
    }
    let doc_ids = overlapping_docs(&inputs.learned, &inputs.unlearned);
    if !doc_ids.is_empty() {
        return Err(Error::OverlappingSplits { doc_ids }).stage("config");
    }
    let mut fp = Fingerprint::new("study-inputs");
    for split in [&inputs.background, &inputs.learned, &inputs.unlearned] {
        fp.str(&dataset_fingerprint(split));
    }
    let variants = cfg
        .variants
        .par_iter()
        .map(|v| run_variant(cfg, v, inputs))
        .collect::<Result<Vec<_>>>()
        .stage("study")?;
    Ok(StudyReport {
        version: super::REPORT_VERSION,
        config: cfg.clone(),
        config_fingerprint: cfg.fingerprint(),
        inputs_fingerprint: fp.hex(),
        variants,
    })
}
