//! Loss oracles: things that can be fine-tuned on samples and report a
//! per-sample mean negative log-likelihood in nats per predicted token.

mod builtin;
mod external;
mod persist;
mod tiny_lm;

use std::collections::BTreeMap;
use std::fmt;
use std::sync::Arc;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::corpus::{sorted_by_id, Sample};
use crate::error::Result;
use crate::fingerprint::Fingerprint;

pub use builtin::BuiltinOracle;
pub use external::{ExternalOracle, LossRecord, LossTable, CONTEXT_OFFSET};
pub use persist::{load_snapshot, save_snapshot, snapshot_from_bytes, snapshot_to_bytes};
pub use tiny_lm::{TinyLm, TinyLmConfig};

/// Role of a model snapshot in the audit.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Stage {
    Vanilla,
    Baseline,
    Reference,
    ReferenceTuned,
    VanillaTuned,
}

impl Stage {
    pub const ALL: [Stage; 5] = [
        Stage::Vanilla,
        Stage::Baseline,
        Stage::Reference,
        Stage::ReferenceTuned,
        Stage::VanillaTuned,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            Stage::Vanilla => "vanilla",
            Stage::Baseline => "baseline",
            Stage::Reference => "reference",
            Stage::ReferenceTuned => "reference_tuned",
            Stage::VanillaTuned => "vanilla_tuned",
        }
    }

    /// The stage a snapshot must be in to be fine-tuned into `self`.
    pub fn parent(self) -> Option<Stage> {
        match self {
            Stage::Vanilla => None,
            Stage::Baseline => Some(Stage::Vanilla),
            Stage::Reference => Some(Stage::Baseline),
            Stage::ReferenceTuned => Some(Stage::Reference),
            Stage::VanillaTuned => Some(Stage::Vanilla),
        }
    }
}

impl fmt::Display for Stage {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

/// One training step in a snapshot's history.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LineageEntry {
    /// Stage produced by this step.
    pub stage: Stage,
    /// Fingerprint of the training samples (ids and tokens, in id order).
    pub dataset: String,
    pub samples: usize,
    pub passes: u32,
    #[serde(default)]
    pub hyperparameters: BTreeMap<String, f64>,
}

/// An immutable trained-model state.
#[derive(Debug, Clone, PartialEq)]
pub struct ModelSnapshot {
    pub model_id: String,
    pub stage: Stage,
    pub lineage: Vec<LineageEntry>,
    pub seed: u64,
    /// Built-in oracle only.
    pub config: Option<TinyLmConfig>,
    /// Built-in oracle only.
    pub parameters: Option<Arc<TinyLm>>,
}

impl ModelSnapshot {
    /// True when `self`'s lineage is `parent`'s plus exactly one entry.
    pub fn extends(&self, parent: &ModelSnapshot) -> bool {
        self.lineage.len() == parent.lineage.len() + 1 && self.lineage[..parent.lineage.len()] == parent.lineage[..]
    }

    pub fn summary(&self) -> ModelSummary {
        ModelSummary {
            model_id: self.model_id.clone(),
            stage: self.stage,
            seed: self.seed,
            lineage: self.lineage.clone(),
        }
    }
}

/// Serializable description of a snapshot without its parameters.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModelSummary {
    pub model_id: String,
    pub stage: Stage,
    pub seed: u64,
    pub lineage: Vec<LineageEntry>,
}

impl ModelSummary {
    pub fn extends(&self, parent: &ModelSummary) -> bool {
        self.lineage.len() == parent.lineage.len() + 1 && self.lineage[..parent.lineage.len()] == parent.lineage[..]
    }
}

/// Fingerprint of a training set: sample ids and tokens in id order.
pub fn dataset_fingerprint(samples: &[Sample]) -> String {
    let mut fp = Fingerprint::new("dataset");
    for s in sorted_by_id(samples) {
        fp.str(&s.sample_id).tokens(&s.tokens);
    }
    fp.hex()
}

/// Anything that can be fine-tuned and report sample losses.
pub trait LossOracle: Sync {
    fn name(&self) -> &'static str;

    /// Identifies everything about the oracle that can change a loss.
    fn fingerprint(&self) -> String;

    /// The model under audit. The built-in oracle pretrains a fresh model on
    /// `background`; external oracles return their configured vanilla id.
    fn vanilla(&self, background: &[Sample]) -> Result<ModelSnapshot>;

    /// Passes used for every pipeline fine-tune.
    fn finetune_passes(&self) -> u32;

    /// Returns a new snapshot at `stage` trained on `samples` for `passes`
    /// full passes. `base` is left untouched.
    fn fine_tune(&self, base: &ModelSnapshot, samples: &[Sample], passes: u32, stage: Stage) -> Result<ModelSnapshot>;

    /// Mean negative log-likelihood of `sample` in nats per predicted token.
    fn sample_loss(&self, snapshot: &ModelSnapshot, sample: &Sample) -> Result<f64>;

    /// Losses for many samples, in input order.
    fn sample_losses(&self, snapshot: &ModelSnapshot, samples: &[Sample]) -> Result<Vec<f64>> {
        samples.par_iter().map(|s| self.sample_loss(snapshot, s)).collect()
    }
}
