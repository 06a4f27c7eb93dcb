//! Corpus preparation: ingestion, passage extraction and dataset partitioning.

mod ingest;
mod manifest;
mod tokenizer;

use std::collections::BTreeSet;
use std::fmt;
use std::path::PathBuf;

use rand::seq::{index, SliceRandom};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::fingerprint::Fingerprint;

pub use ingest::{ingest_documents, list_text_files};
pub use manifest::{CorpusManifest, DocumentEntry, ManifestSamples, SampleEntry};
pub use tokenizer::{Tokenizer, TokenizerKind, UNKNOWN_WORD};

pub type TokenId = u32;

/// A tokenized source document (one novel in the original setting).
#[derive(Debug, Clone, PartialEq)]
pub struct Document {
    pub doc_id: String,
    pub title: String,
    pub source: PathBuf,
    pub text: String,
    pub tokens: Vec<TokenId>,
    /// Number of U+FFFD substitutions made while decoding the file.
    pub lossy_replacements: usize,
    /// SHA-256 of the raw file bytes.
    pub digest: String,
}

impl Document {
    /// Builds an in-memory document, tokenizing `text` with `tokenizer`.
    pub fn from_text(doc_id: impl Into<String>, text: impl Into<String>, tokenizer: &Tokenizer) -> Self {
        let doc_id = doc_id.into();
        let text = text.into();
        Document {
            title: doc_id.clone(),
            source: PathBuf::new(),
            tokens: tokenizer.encode(&text),
            lossy_replacements: 0,
            digest: crate::fingerprint::sha256_hex(text.as_bytes()),
            doc_id,
            text,
        }
    }

    pub fn token_count(&self) -> usize {
        self.tokens.len()
    }
}

/// The four datasets of the audit, plus documents left unassigned.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Split {
    Baseline,
    Unlearned1,
    Target,
    Unlearned2,
    Spare,
}

impl Split {
    pub const ALL: [Split; 5] = [
        Split::Baseline,
        Split::Unlearned1,
        Split::Target,
        Split::Unlearned2,
        Split::Spare,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            Split::Baseline => "baseline",
            Split::Unlearned1 => "unlearned1",
            Split::Target => "target",
            Split::Unlearned2 => "unlearned2",
            Split::Spare => "spare",
        }
    }
}

impl fmt::Display for Split {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

/// A fixed-length token passage; the unit of membership inference.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Sample {
    pub sample_id: String,
    pub doc_id: String,
    pub split: Split,
    pub offset: usize,
    pub tokens: Vec<TokenId>,
}

impl Sample {
    pub fn new(doc_id: &str, split: Split, offset: usize, tokens: Vec<TokenId>) -> Self {
        Sample {
            sample_id: sample_id(doc_id, offset, tokens.len()),
            doc_id: doc_id.to_string(),
            split,
            offset,
            tokens,
        }
    }

    pub fn token_count(&self) -> usize {
        self.tokens.len()
    }
}

/// Deterministic sample identifier derived from `(doc_id, offset, token_count)`.
pub fn sample_id(doc_id: &str, offset: usize, token_count: usize) -> String {
    let mut fp = Fingerprint::new("sample");
    fp.str(doc_id).u64(offset as u64).u64(token_count as u64);
    format!("s{}", &fp.hex()[..16])
}

/// How many passages of which length to cut from every document.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct PassagePlan {
    pub passage_len_tokens: usize,
    pub passages_per_doc: usize,
    pub rng_seed: u64,
}

impl PassagePlan {
    pub fn validate(&self) -> Result<()> {
        if self.passage_len_tokens < 2 {
            return Err(Error::Config(format!(
                "passage length must be at least 2 tokens, got {}",
                self.passage_len_tokens
            )));
        }
        if self.passages_per_doc < 1 {
            return Err(Error::Config("passages per document must be at least 1".into()));
        }
        Ok(())
    }
}

/// Document counts per split.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct SplitPlan {
    pub baseline_docs: usize,
    pub unlearned1_docs: usize,
    pub target_docs: usize,
    pub unlearned2_docs: usize,
}

impl SplitPlan {
    pub fn total(&self) -> usize {
        self.baseline_docs + self.unlearned1_docs + self.target_docs + self.unlearned2_docs
    }

    pub fn validate(&self) -> Result<()> {
        if self.unlearned2_docs != self.target_docs {
            return Err(Error::Config(format!(
                "unlearned II must match the target dataset in size ({} vs {})",
                self.unlearned2_docs, self.target_docs
            )));
        }
        Ok(())
    }
}

impl std::str::FromStr for SplitPlan {
    type Err = String;

    /// Parses `baseline,unlearned1,target,unlearned2`, e.g. `35,35,15,15`.
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let parts: Vec<usize> = s
            .split(',')
            .map(|p| {
                p.trim()
                    .parse::<usize>()
                    .map_err(|e| format!("bad split count `{p}`: {e}"))
            })
            .collect::<Result<_, _>>()?;
        match parts.as_slice() {
            &[baseline_docs, unlearned1_docs, target_docs, unlearned2_docs] => Ok(SplitPlan {
                baseline_docs,
                unlearned1_docs,
                target_docs,
                unlearned2_docs,
            }),
            _ => Err(format!("expected four comma-separated counts, got `{s}`")),
        }
    }
}

/// Passages cut from one document, with the shortfall when it could not supply `N`.
#[derive(Debug, Clone, PartialEq)]
pub struct Extraction {
    pub samples: Vec<Sample>,
    pub shortfall: Option<String>,
}

/// Cuts up to `plan.passages_per_doc` non-overlapping passages of exactly
/// `plan.passage_len_tokens` tokens from `doc`.
///
/// Offsets are drawn uniformly over all non-overlapping placements: choosing
/// `k` placements of length `l` in `T` tokens is equivalent to choosing `k`
/// distinct values from `0..T - k*l + k` and subtracting their rank.
pub fn extract_passages(doc: &Document, plan: &PassagePlan, split: Split) -> Result<Extraction> {
    plan.validate()?;
    let len = plan.passage_len_tokens;
    let total = doc.token_count();
    if total < len {
        return Err(Error::DocumentTooShort {
            doc_id: doc.doc_id.clone(),
            tokens: total,
            passage_len: len,
        });
    }
    let capacity = total / len;
    let k = plan.passages_per_doc.min(capacity);
    let slack = total - k * len;

    let mut seed = Fingerprint::new("passages");
    seed.u64(plan.rng_seed).str(&doc.doc_id);
    let mut rng = ChaCha8Rng::seed_from_u64(seed.seed());
    let mut picks = index::sample(&mut rng, slack + k, k).into_vec();
    picks.sort_unstable();

    let samples = picks
        .into_iter()
        .enumerate()
        .map(|(rank, v)| {
            let offset = v - rank + rank * len;
            Sample::new(&doc.doc_id, split, offset, doc.tokens[offset..offset + len].to_vec())
        })
        .collect();

    let shortfall = (k < plan.passages_per_doc).then(|| {
        format!(
            "document {} yields only {k} of {} passages of {len} tokens",
            doc.doc_id, plan.passages_per_doc
        )
    });
    Ok(Extraction { samples, shortfall })
}

/// Document-level assignment to the four datasets.
#[derive(Debug, Clone, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct CorpusSplits {
    pub baseline: Vec<String>,
    pub unlearned1: Vec<String>,
    pub target: Vec<String>,
    pub unlearned2: Vec<String>,
    /// Unassigned documents, available as background or alternative targets.
    pub spare: Vec<String>,
}

impl CorpusSplits {
    pub fn docs(&self, split: Split) -> &[String] {
        match split {
            Split::Baseline => &self.baseline,
            Split::Unlearned1 => &self.unlearned1,
            Split::Target => &self.target,
            Split::Unlearned2 => &self.unlearned2,
            Split::Spare => &self.spare,
        }
    }

    pub fn split_of(&self, doc_id: &str) -> Option<Split> {
        Split::ALL
            .into_iter()
            .find(|&s| self.docs(s).iter().any(|d| d == doc_id))
    }
}

/// Seeded shuffle of the documents into four disjoint splits of exactly the
/// planned sizes. The input order does not matter: documents are sorted by
/// id before shuffling.
pub fn partition_corpus(docs: &[Document], plan: &SplitPlan, rng_seed: u64) -> Result<CorpusSplits> {
    plan.validate()?;
    let mut ids: Vec<String> = docs.iter().map(|d| d.doc_id.clone()).collect();
    ids.sort();
    ids.dedup();
    if ids.len() != docs.len() {
        return Err(Error::Config("document ids are not unique".into()));
    }
    if ids.len() < plan.total() {
        return Err(Error::InsufficientDocuments {
            required: plan.total(),
            available: ids.len(),
        });
    }
    let mut seed = Fingerprint::new("partition");
    seed.u64(rng_seed);
    let mut rng = ChaCha8Rng::seed_from_u64(seed.seed());
    ids.shuffle(&mut rng);

    let mut rest = ids.into_iter();
    let mut take = |n: usize| {
        let mut v: Vec<String> = rest.by_ref().take(n).collect();
        v.sort();
        v
    };
    let baseline = take(plan.baseline_docs);
    let unlearned1 = take(plan.unlearned1_docs);
    let target = take(plan.target_docs);
    let unlearned2 = take(plan.unlearned2_docs);
    let spare = take(usize::MAX);
    Ok(CorpusSplits {
        baseline,
        unlearned1,
        target,
        unlearned2,
        spare,
    })
}

/// Keeps the first `k` tokens of a sample. The id gains a `:k<k>` suffix
/// unless `k` is the full length.
pub fn truncate_sample(sample: &Sample, k: usize) -> Result<Sample> {
    let max = sample.token_count();
    if k < 1 || k > max {
        return Err(Error::PrefixOutOfRange {
            sample_id: sample.sample_id.clone(),
            k,
            min: 1,
            max,
        });
    }
    if k == max {
        return Ok(sample.clone());
    }
    Ok(Sample {
        sample_id: format!("{}:k{k}", sample.sample_id),
        doc_id: sample.doc_id.clone(),
        split: sample.split,
        offset: sample.offset,
        tokens: sample.tokens[..k].to_vec(),
    })
}

/// Doc ids shared between two sample sets, sorted.
pub fn overlapping_docs(a: &[Sample], b: &[Sample]) -> Vec<String> {
    let left: BTreeSet<&str> = a.iter().map(|s| s.doc_id.as_str()).collect();
    let right: BTreeSet<&str> = b.iter().map(|s| s.doc_id.as_str()).collect();
    left.intersection(&right).map(|s| s.to_string()).collect()
}

/// Samples ordered by id, the order every training pass and reduction uses.
pub fn sorted_by_id(samples: &[Sample]) -> Vec<&Sample> {
    let mut v: Vec<&Sample> = samples.iter().collect();
    v.sort_by(|a, b| a.sample_id.cmp(&b.sample_id));
    v
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn doc(id: &str, n: usize) -> Document {
        let text: String = (0..n).map(|i| (b'a' + (i % 26) as u8) as char).collect();
        Document::from_text(id, text, &Tokenizer::Bytes)
    }

    fn plan(len: usize, n: usize) -> PassagePlan {
        PassagePlan {
            passage_len_tokens: len,
            passages_per_doc: n,
            rng_seed: 11,
        }
    }

    #[test]
    fn extract_full_capacity() {
        let d = doc("d", 1000);
        let ex = extract_passages(&d, &plan(100, 5), Split::Baseline).unwrap();
        assert_eq!(ex.samples.len(), 5);
        assert!(ex.shortfall.is_none());
        for s in &ex.samples {
            assert_eq!(s.token_count(), 100);
            assert_eq!(s.tokens, d.tokens[s.offset..s.offset + 100]);
        }
        for w in ex.samples.windows(2) {
            assert!(w[0].offset + 100 <= w[1].offset);
        }
    }

    #[test]
    fn extract_short_document_warns() {
        let ex = extract_passages(&doc("d", 150), &plan(100, 5), Split::Target).unwrap();
        assert_eq!(ex.samples.len(), 1);
        assert!(ex.shortfall.unwrap().contains("only 1 of 5"));
    }

    #[test]
    fn extract_rejects_document_shorter_than_a_passage() {
        let err = extract_passages(&doc("tiny", 50), &plan(100, 1), Split::Target).unwrap_err();
        assert!(matches!(err, Error::DocumentTooShort { ref doc_id, .. } if doc_id == "tiny"));
    }

    #[test]
    fn extract_is_deterministic_at_book_scale() {
        // 50 000 "words" of 1 token each, twenty 500-token passages.
        let d = doc("novel", 50_000);
        let p = plan(500, 20);
        let a = extract_passages(&d, &p, Split::Baseline).unwrap();
        let b = extract_passages(&d, &p, Split::Baseline).unwrap();
        assert_eq!(a.samples.len(), 20);
        assert_eq!(a, b);
        let other = extract_passages(&d, &PassagePlan { rng_seed: 12, ..p }, Split::Baseline).unwrap();
        assert_ne!(
            a.samples.iter().map(|s| s.offset).collect::<Vec<_>>(),
            other.samples.iter().map(|s| s.offset).collect::<Vec<_>>()
        );
    }

    #[test]
    fn partition_hundred_twenty_documents() {
        let docs: Vec<Document> = (0..120).map(|i| doc(&format!("n{i:03}"), 10)).collect();
        let plan: SplitPlan = "35,35,15,15".parse().unwrap();
        let s = partition_corpus(&docs, &plan, 3).unwrap();
        assert_eq!(
            (
                s.baseline.len(),
                s.unlearned1.len(),
                s.target.len(),
                s.unlearned2.len(),
                s.spare.len()
            ),
            (35, 35, 15, 15, 20)
        );
        assert_eq!(s, partition_corpus(&docs, &plan, 3).unwrap());
    }

    #[test]
    fn partition_one_each() {
        let docs: Vec<Document> = (0..4).map(|i| doc(&format!("d{i}"), 10)).collect();
        let s = partition_corpus(&docs, &"1,1,1,1".parse().unwrap(), 0).unwrap();
        let mut all: Vec<&String> = s
            .baseline
            .iter()
            .chain(&s.unlearned1)
            .chain(&s.target)
            .chain(&s.unlearned2)
            .collect();
        all.sort();
        all.dedup();
        assert_eq!(all.len(), 4);
        assert!(s.spare.is_empty());
    }

    #[test]
    fn partition_insufficient() {
        let docs: Vec<Document> = (0..3).map(|i| doc(&format!("d{i}"), 10)).collect();
        let err = partition_corpus(&docs, &"1,1,1,1".parse().unwrap(), 0).unwrap_err();
        assert!(matches!(
            err,
            Error::InsufficientDocuments {
                required: 4,
                available: 3
            }
        ));
    }

    #[test]
    fn truncation_edges() {
        let d = doc("d", 128);
        let s = Sample::new("d", Split::Target, 0, d.tokens.clone());
        assert_eq!(truncate_sample(&s, 128).unwrap(), s);
        let t = truncate_sample(&s, 50).unwrap();
        assert_eq!(t.tokens, s.tokens[..50]);
        assert_eq!(t.split, s.split);
        assert_eq!(t.doc_id, s.doc_id);
        assert!(t.sample_id.ends_with(":k50"));
        match truncate_sample(&s, 0).unwrap_err() {
            Error::PrefixOutOfRange { min, max, .. } => assert_eq!((min, max), (1, 128)),
            e => panic!("unexpected {e}"),
        }
    }

    proptest! {
        #[test]
        fn passages_never_overlap(total in 2usize..3000, len in 2usize..200, n in 1usize..30, seed: u64) {
            prop_assume!(total >= len);
            let d = doc("p", total);
            let ex = extract_passages(&d, &PassagePlan { passage_len_tokens: len, passages_per_doc: n, rng_seed: seed }, Split::Spare).unwrap();
            prop_assert_eq!(ex.samples.len(), n.min(total / len));
            for w in ex.samples.windows(2) {
                prop_assert!(w[0].offset + len <= w[1].offset);
            }
            let last = ex.samples.last().unwrap();
            prop_assert!(last.offset + len <= total);
        }

        #[test]
        fn partition_is_disjoint(n_docs in 4usize..60, seed: u64, a in 0usize..10, b in 0usize..10, t in 0usize..10) {
            prop_assume!(a + b + 2 * t <= n_docs);
            let docs: Vec<Document> = (0..n_docs).map(|i| doc(&format!("d{i}"), 4)).collect();
            let plan = SplitPlan { baseline_docs: a, unlearned1_docs: b, target_docs: t, unlearned2_docs: t };
            let s = partition_corpus(&docs, &plan, seed).unwrap();
            let mut seen = BTreeSet::new();
            for split in Split::ALL {
                for d in s.docs(split) {
                    prop_assert!(seen.insert(d.clone()));
                }
            }
            prop_assert_eq!(seen.len(), n_docs);
        }

        #[test]
        fn truncation_is_a_prefix(len in 1usize..300, k_frac in 0.0f64..1.0) {
            let s = Sample::new("d", Split::Target, 0, (0..len as u32).collect());
            let k = 1 + ((len - 1) as f64 * k_frac) as usize;
            let t = truncate_sample(&s, k).unwrap();
            prop_assert_eq!(&t.tokens[..], &s.tokens[..k]);
        }
    }
}
