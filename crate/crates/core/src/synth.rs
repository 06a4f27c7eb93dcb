//! Seeded synthetic corpus of novel-like documents.
//!
//! Every document draws a private vocabulary from a shared pseudo-word
//! lexicon and writes Zipf-weighted sentences with it. Spelling is shared
//! across documents; word choice and order are document specific, which is
//! what a language model can memorise.

use std::path::{Path, PathBuf};

use rand::distr::weighted::WeightedIndex;
use rand::distr::Distribution;
use rand::seq::IndexedRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::corpus::{CorpusManifest, Document, PassagePlan, SplitPlan, Tokenizer};
use crate::error::{Error, Result};
use crate::fingerprint::Fingerprint;
use crate::pipeline::AuditInputs;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct SynthConfig {
    pub documents: usize,
    /// Minimum document length in bytes.
    pub min_bytes: usize,
    pub lexicon_size: usize,
    pub words_per_doc: usize,
    pub seed: u64,
}

impl Default for SynthConfig {
    fn default() -> Self {
        SynthConfig {
            documents: 56,
            min_bytes: 2400,
            lexicon_size: 1500,
            words_per_doc: 60,
            seed: 2024,
        }
    }
}

const ONSETS: &[&str] = &[
    "b", "c", "d", "f", "g", "h", "j", "k", "l", "m", "n", "p", "r", "s", "t", "v", "w", "z", "br", "ch", "dr", "fl",
    "gr", "kl", "pr", "sh", "st", "th", "tr",
];
const VOWELS: &[&str] = &["a", "e", "i", "o", "u", "ae", "ai", "ea", "io", "ou"];
const CODAS: &[&str] = &["", "", "", "n", "r", "s", "l", "m", "nd", "st", "th"];

fn lexicon(cfg: &SynthConfig, rng: &mut ChaCha8Rng) -> Vec<String> {
    let mut words = std::collections::BTreeSet::new();
    while words.len() < cfg.lexicon_size {
        let syllables = rng.random_range(1..=3);
        let mut w = String::new();
        for _ in 0..syllables {
            w.push_str(ONSETS.choose(rng).expect("non-empty"));
            w.push_str(VOWELS.choose(rng).expect("non-empty"));
            w.push_str(CODAS.choose(rng).expect("non-empty"));
        }
        words.insert(w);
    }
    words.into_iter().collect()
}

fn capitalize(w: &str) -> String {
    let mut c = w.chars();
    c.next()
        .map(|f| f.to_ascii_uppercase().to_string() + c.as_str())
        .unwrap_or_default()
}

/// `(doc_id, text)` pairs, ids `doc000`, `doc001`, …
pub fn synthesize(cfg: &SynthConfig) -> Result<Vec<(String, String)>> {
    if cfg.documents == 0 || cfg.words_per_doc == 0 || cfg.lexicon_size < cfg.words_per_doc {
        return Err(Error::Config(format!("invalid synthetic corpus configuration {cfg:?}")));
    }
    let mut seed = Fingerprint::new("synth-lexicon");
    seed.u64(cfg.seed);
    let lex = lexicon(cfg, &mut ChaCha8Rng::seed_from_u64(seed.seed()));
    let zipf: Vec<f64> = (0..cfg.words_per_doc).map(|r| 1.0 / (r as f64 + 1.0)).collect();
    let pick = WeightedIndex::new(&zipf).expect("positive weights");

    (0..cfg.documents)
        .map(|i| {
            let doc_id = format!("doc{i:03}");
            let mut seed = Fingerprint::new("synth-doc");
            seed.u64(cfg.seed).str(&doc_id);
            let mut rng = ChaCha8Rng::seed_from_u64(seed.seed());
            let vocab: Vec<&String> = lex.choose_multiple(&mut rng, cfg.words_per_doc).collect();
            let mut text = format!("{} {}\n\n", capitalize(vocab[0]), capitalize(vocab[1]));
            while text.len() < cfg.min_bytes {
                let n = rng.random_range(5..=12);
                for k in 0..n {
                    let w = vocab[pick.sample(&mut rng)];
                    if k == 0 {
                        text.push_str(&capitalize(w));
                    } else {
                        text.push(' ');
                        text.push_str(w);
                    }
                }
                text.push_str(". ");
            }
            Ok((doc_id, text.trim_end().to_string() + "\n"))
        })
        .collect()
}

/// In-memory documents, tokenized with `tokenizer`.
pub fn documents(cfg: &SynthConfig, tokenizer: &Tokenizer) -> Result<Vec<Document>> {
    Ok(synthesize(cfg)?
        .into_iter()
        .map(|(id, text)| Document::from_text(id, text, tokenizer))
        .collect())
}

/// Writes one `<doc_id>.txt` per document into `dir` (created if missing).
pub fn write_corpus(cfg: &SynthConfig, dir: &Path) -> Result<Vec<PathBuf>> {
    std::fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    synthesize(cfg)?
        .into_iter()
        .map(|(id, text)| {
            let path = dir.join(format!("{id}.txt"));
            std::fs::write(&path, text).map_err(|e| Error::io(&path, e))?;
            Ok(path)
        })
        .collect()
}

/// Which target documents the vanilla model is pretrained on.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Membership {
    AllSeen,
    AllUnseen,
    /// The first half of the target documents, by id.
    Mixed,
}

/// Controlled audit inputs. The vanilla model's background is built from
/// the spare documents; the target documents selected by `membership` are
/// planted in it and displace as many spare documents (the last by id), so
/// the background size does not depend on `membership`. Ground truth labels
/// every target sample by whether its document was planted.
pub fn planted_audit(
    docs: &[Document],
    passages: &PassagePlan,
    splits: &SplitPlan,
    split_seed: u64,
    membership: Membership,
) -> Result<AuditInputs> {
    let (manifest, samples) = CorpusManifest::build(docs, Tokenizer::Bytes, *passages, *splits, split_seed)?;
    let parts = manifest.splits();
    let planted: Vec<String> = match membership {
        Membership::AllSeen => parts.target.clone(),
        Membership::AllUnseen => Vec::new(),
        Membership::Mixed => parts.target[..parts.target.len() / 2].to_vec(),
    };
    if parts.spare.len() < planted.len() {
        return Err(Error::InsufficientDocuments {
            required: splits.total() + planted.len(),
            available: docs.len(),
        });
    }
    let displaced = &parts.spare[parts.spare.len() - planted.len()..];
    let kept: Vec<_> = samples.into_iter().filter(|s| !displaced.contains(&s.doc_id)).collect();
    Ok(AuditInputs::from_samples(kept, &planted, Some(&planted)))
}
