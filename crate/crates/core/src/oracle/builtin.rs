use std::collections::BTreeMap;
use std::sync::Arc;

use super::{dataset_fingerprint, LineageEntry, LossOracle, LossRecord, ModelSnapshot, Stage, TinyLm, TinyLmConfig};
use crate::corpus::{sorted_by_id, Sample};
use crate::error::{Error, Result};
use crate::fingerprint::Fingerprint;

/// Deterministic, framework-free oracle backed by [`TinyLm`].
#[derive(Debug, Clone)]
pub struct BuiltinOracle {
    cfg: TinyLmConfig,
}

impl BuiltinOracle {
    pub fn new(cfg: TinyLmConfig) -> Result<Self> {
        cfg.validate()?;
        Ok(BuiltinOracle { cfg })
    }

    pub fn config(&self) -> &TinyLmConfig {
        &self.cfg
    }

    /// A freshly initialised vanilla snapshot with empty lineage.
    pub fn init(&self) -> Result<ModelSnapshot> {
        tiny_lm_init(self.cfg)
    }

    /// Per-token record for the wire format, as an exporter would emit it.
    pub fn loss_record(&self, snapshot: &ModelSnapshot, sample: &Sample) -> Result<LossRecord> {
        let lm = params(snapshot)?;
        check_predictable(lm, sample)?;
        let per_token = lm.token_nlls(&sample.tokens);
        Ok(LossRecord {
            sample_id: sample.sample_id.clone(),
            model_id: snapshot.model_id.clone(),
            token_count: sample.token_count(),
            mean_nll: per_token.iter().sum::<f64>() / per_token.len() as f64,
            per_token_nll: Some(per_token),
        })
    }

    fn train(&self, base: &ModelSnapshot, samples: &[Sample], passes: u32, stage: Stage) -> Result<ModelSnapshot> {
        if passes < 1 {
            return Err(Error::Precondition("fine-tuning needs at least one pass".into()));
        }
        if samples.is_empty() {
            return Err(Error::Precondition(format!("no samples to train the {stage} model on")));
        }
        let lm = params(base)?;
        for s in samples {
            lm.check_sample(s)?;
        }
        let mut next = (**lm).clone();
        next.train(&sorted_by_id(samples), passes);

        let cfg = *lm.config();
        let mut lineage = base.lineage.clone();
        lineage.push(LineageEntry {
            stage,
            dataset: dataset_fingerprint(samples),
            samples: samples.len(),
            passes,
            hyperparameters: BTreeMap::from([
                ("learning_rate".to_string(), cfg.learning_rate),
                ("batch_size".to_string(), cfg.batch_size as f64),
            ]),
        });
        Ok(ModelSnapshot {
            model_id: model_id(&cfg, &lineage),
            stage,
            lineage,
            seed: cfg.seed,
            config: Some(cfg),
            parameters: Some(Arc::new(next)),
        })
    }
}

/// Fresh snapshot: parameters uniform in `[-0.05, 0.05]` from `cfg.seed`.
pub fn tiny_lm_init(cfg: TinyLmConfig) -> Result<ModelSnapshot> {
    let lm = TinyLm::init(cfg)?;
    Ok(ModelSnapshot {
        model_id: model_id(&cfg, &[]),
        stage: Stage::Vanilla,
        lineage: Vec::new(),
        seed: cfg.seed,
        config: Some(cfg),
        parameters: Some(Arc::new(lm)),
    })
}

pub(crate) fn model_id(cfg: &TinyLmConfig, lineage: &[LineageEntry]) -> String {
    let mut fp = Fingerprint::new("model");
    fp.u64(cfg.seed).str(&cfg.fingerprint());
    for e in lineage {
        fp.str(e.stage.as_str())
            .str(&e.dataset)
            .u64(e.samples as u64)
            .u64(e.passes as u64);
        for (k, v) in &e.hyperparameters {
            fp.str(k).f64(*v);
        }
    }
    format!("m{}", &fp.hex()[..16])
}

fn params(snapshot: &ModelSnapshot) -> Result<&Arc<TinyLm>> {
    snapshot
        .parameters
        .as_ref()
        .ok_or_else(|| Error::Precondition(format!("snapshot {} carries no built-in parameters", snapshot.model_id)))
}

fn check_predictable(lm: &TinyLm, sample: &Sample) -> Result<()> {
    if sample.token_count() < 2 {
        return Err(Error::SampleTooShort {
            sample_id: sample.sample_id.clone(),
            tokens: sample.token_count(),
        });
    }
    lm.check_sample(sample)
}

impl LossOracle for BuiltinOracle {
    fn name(&self) -> &'static str {
        "builtin"
    }

    fn fingerprint(&self) -> String {
        let mut fp = Fingerprint::new("builtin-oracle");
        fp.str(&self.cfg.fingerprint());
        fp.hex()
    }

    fn vanilla(&self, background: &[Sample]) -> Result<ModelSnapshot> {
        let init = self.init()?;
        if self.cfg.pretrain_passes == 0 || background.is_empty() {
            return Ok(init);
        }
        self.train(&init, background, self.cfg.pretrain_passes, Stage::Vanilla)
    }

    fn finetune_passes(&self) -> u32 {
        self.cfg.finetune_passes
    }

    fn fine_tune(&self, base: &ModelSnapshot, samples: &[Sample], passes: u32, stage: Stage) -> Result<ModelSnapshot> {
        self.train(base, samples, passes, stage)
    }

    fn sample_loss(&self, snapshot: &ModelSnapshot, sample: &Sample) -> Result<f64> {
        let lm = params(snapshot)?;
        check_predictable(lm, sample)?;
        Ok(lm.mean_nll(&sample.tokens))
    }
}
