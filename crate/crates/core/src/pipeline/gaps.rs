use serde::{Deserialize, Serialize};

use crate::corpus::{truncate_sample, Sample, Split};
use crate::error::{Error, Result};
use crate::oracle::{LossOracle, ModelSnapshot, Stage};

/// How a raw loss difference becomes the gap feature.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum GapTransform {
    /// `pre − post` in nats/token.
    #[default]
    Raw,
    /// Signed `ln(1 + |pre − post|)`; monotone, defined for negative gaps.
    SignedLog,
}

impl GapTransform {
    pub fn apply(self, diff: f64) -> f64 {
        match self {
            GapTransform::Raw => diff,
            GapTransform::SignedLog => diff.signum() * diff.abs().ln_1p(),
        }
    }
}

/// Per-sample loss decrease between a sanctioned model pair.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GapRecord {
    pub sample_id: String,
    pub doc_id: String,
    pub split: Split,
    pub gap: f64,
    pub pre_loss: f64,
    pub post_loss: f64,
    pub pre_model_id: String,
    pub post_model_id: String,
}

fn sanctioned(pre: &ModelSnapshot, post: &ModelSnapshot) -> bool {
    matches!(
        (pre.stage, post.stage),
        (Stage::Baseline, Stage::Reference)
            | (Stage::Reference, Stage::ReferenceTuned)
            | (Stage::Vanilla, Stage::VanillaTuned)
    ) || pre.model_id == post.model_id
}

/// Loss gaps `loss(pre) − loss(post)` for every sample truncated to
/// `eval_token_len` tokens (full length when `None`), ordered by sample id.
pub fn compute_gaps(
    oracle: &dyn LossOracle,
    pre: &ModelSnapshot,
    post: &ModelSnapshot,
    samples: &[Sample],
    eval_token_len: Option<usize>,
    transform: GapTransform,
) -> Result<Vec<GapRecord>> {
    if !sanctioned(pre, post) {
        return Err(Error::UnsanctionedPair {
            pre: format!("{} {}", pre.stage, pre.model_id),
            post: format!("{} {}", post.stage, post.model_id),
        });
    }
    let eval: Vec<Sample> = match eval_token_len {
        Some(k) => samples.iter().map(|s| truncate_sample(s, k)).collect::<Result<_>>()?,
        None => samples.to_vec(),
    };
    let pre_losses = oracle.sample_losses(pre, &eval)?;
    let post_losses = if pre.model_id == post.model_id {
        pre_losses.clone()
    } else {
        oracle.sample_losses(post, &eval)?
    };
    let mut records = samples
        .iter()
        .zip(pre_losses.into_iter().zip(post_losses))
        .map(|(s, (a, b))| {
            let gap = transform.apply(a - b);
            if !gap.is_finite() {
                return Err(Error::Precondition(format!(
                    "non-finite gap for sample {}",
                    s.sample_id
                )));
            }
            Ok(GapRecord {
                sample_id: s.sample_id.clone(),
                doc_id: s.doc_id.clone(),
                split: s.split,
                gap,
                pre_loss: a,
                post_loss: b,
                pre_model_id: pre.model_id.clone(),
                post_model_id: post.model_id.clone(),
            })
        })
        .collect::<Result<Vec<_>>>()?;
    records.sort_by(|a, b| a.sample_id.cmp(&b.sample_id));
    Ok(records)
}

pub(crate) fn gap_values(records: &[GapRecord]) -> Vec<f64> {
    records.iter().map(|r| r.gap).collect()
}
