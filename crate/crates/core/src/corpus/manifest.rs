use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use super::{
    extract_passages, partition_corpus, CorpusSplits, Document, PassagePlan, Sample, Split, SplitPlan, Tokenizer,
};
use crate::error::{Error, Result};
use crate::fingerprint::sha256_hex;

pub const MANIFEST_VERSION: u32 = 1;

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct DocumentEntry {
    pub doc_id: String,
    pub title: String,
    pub source: PathBuf,
    pub sha256: String,
    pub split: Split,
    pub token_count: usize,
    #[serde(default, skip_serializing_if = "is_zero")]
    pub lossy_replacements: usize,
}

fn is_zero(n: &usize) -> bool {
    *n == 0
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SampleEntry {
    pub sample_id: String,
    pub doc_id: String,
    pub offset: usize,
    pub token_count: usize,
}

#[derive(Debug, Clone, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct ManifestSamples {
    pub baseline: Vec<SampleEntry>,
    pub unlearned1: Vec<SampleEntry>,
    pub target: Vec<SampleEntry>,
    pub unlearned2: Vec<SampleEntry>,
    pub spare: Vec<SampleEntry>,
}

impl ManifestSamples {
    fn get_mut(&mut self, split: Split) -> &mut Vec<SampleEntry> {
        match split {
            Split::Baseline => &mut self.baseline,
            Split::Unlearned1 => &mut self.unlearned1,
            Split::Target => &mut self.target,
            Split::Unlearned2 => &mut self.unlearned2,
            Split::Spare => &mut self.spare,
        }
    }
}

/// Record of a corpus build: which document went to which split and which
/// passages were cut from it. Enough to rebuild every [`Sample`] from the
/// source files.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct CorpusManifest {
    pub version: u32,
    pub tokenizer: Tokenizer,
    pub passage_plan: PassagePlan,
    pub split_plan: SplitPlan,
    pub split_seed: u64,
    pub documents: Vec<DocumentEntry>,
    pub samples: ManifestSamples,
    #[serde(default)]
    pub warnings: Vec<String>,
}

impl CorpusManifest {
    /// Partitions `docs`, extracts passages from every document (spare ones
    /// included) and records the result. Returns the manifest and the samples
    /// ordered by split, then doc id, then offset.
    pub fn build(
        docs: &[Document],
        tokenizer: Tokenizer,
        passage_plan: PassagePlan,
        split_plan: SplitPlan,
        split_seed: u64,
    ) -> Result<(Self, Vec<Sample>)> {
        let splits = partition_corpus(docs, &split_plan, split_seed)?;
        let mut sorted: Vec<&Document> = docs.iter().collect();
        sorted.sort_by(|a, b| a.doc_id.cmp(&b.doc_id));

        let mut documents = Vec::with_capacity(docs.len());
        let mut entries = ManifestSamples::default();
        let mut warnings = Vec::new();
        let mut samples = Vec::new();
        for split in Split::ALL {
            for doc in sorted.iter().filter(|d| splits.split_of(&d.doc_id) == Some(split)) {
                let ex = extract_passages(doc, &passage_plan, split)?;
                warnings.extend(ex.shortfall);
                if doc.lossy_replacements > 0 {
                    warnings.push(format!(
                        "document {} had {} invalid UTF-8 sequences replaced",
                        doc.doc_id, doc.lossy_replacements
                    ));
                }
                entries.get_mut(split).extend(ex.samples.iter().map(|s| SampleEntry {
                    sample_id: s.sample_id.clone(),
                    doc_id: s.doc_id.clone(),
                    offset: s.offset,
                    token_count: s.token_count(),
                }));
                samples.extend(ex.samples);
            }
        }
        for doc in &sorted {
            documents.push(DocumentEntry {
                doc_id: doc.doc_id.clone(),
                title: doc.title.clone(),
                source: doc.source.clone(),
                sha256: doc.digest.clone(),
                split: splits.split_of(&doc.doc_id).expect("every document is assigned"),
                token_count: doc.token_count(),
                lossy_replacements: doc.lossy_replacements,
            });
        }
        let manifest = CorpusManifest {
            version: MANIFEST_VERSION,
            tokenizer,
            passage_plan,
            split_plan,
            split_seed,
            documents,
            samples: entries,
            warnings,
        };
        Ok((manifest, samples))
    }

    pub fn splits(&self) -> CorpusSplits {
        let mut s = CorpusSplits::default();
        for d in &self.documents {
            let v = match d.split {
                Split::Baseline => &mut s.baseline,
                Split::Unlearned1 => &mut s.unlearned1,
                Split::Target => &mut s.target,
                Split::Unlearned2 => &mut s.unlearned2,
                Split::Spare => &mut s.spare,
            };
            v.push(d.doc_id.clone());
        }
        s
    }

    /// Rewrites document sources relative to `dir` where possible.
    pub fn relativize_sources(&mut self, dir: &Path) {
        let Ok(base) = dir.canonicalize() else { return };
        for d in &mut self.documents {
            if let Ok(abs) = d.source.canonicalize() {
                d.source = abs.strip_prefix(&base).map(Path::to_path_buf).unwrap_or(abs);
            }
        }
    }

    pub fn to_json(&self) -> Result<String> {
        let mut s = serde_json::to_string_pretty(self)?;
        s.push('\n');
        Ok(s)
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        std::fs::write(path, self.to_json()?).map_err(|e| Error::io(path, e))
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        let manifest: CorpusManifest = serde_json::from_str(&text)?;
        if manifest.version != MANIFEST_VERSION {
            return Err(Error::Config(format!(
                "unsupported manifest version {} in {}",
                manifest.version,
                path.display()
            )));
        }
        Ok(manifest)
    }

    /// Re-reads the source documents (relative paths resolve against
    /// `base_dir`) and rebuilds every sample, checking digests and ids.
    pub fn materialize(&self, base_dir: &Path) -> Result<Vec<Sample>> {
        let mut out = Vec::new();
        for doc in &self.documents {
            let path = if doc.source.is_absolute() {
                doc.source.clone()
            } else {
                base_dir.join(&doc.source)
            };
            let bytes = std::fs::read(&path).map_err(|e| Error::io(&path, e))?;
            if sha256_hex(&bytes) != doc.sha256 {
                return Err(Error::Config(format!(
                    "document {} changed since the manifest was built ({})",
                    doc.doc_id,
                    path.display()
                )));
            }
            let text = String::from_utf8_lossy(&bytes);
            let tokens = self.tokenizer.encode(&text);
            let entries = match doc.split {
                Split::Baseline => &self.samples.baseline,
                Split::Unlearned1 => &self.samples.unlearned1,
                Split::Target => &self.samples.target,
                Split::Unlearned2 => &self.samples.unlearned2,
                Split::Spare => &self.samples.spare,
            };
            for e in entries.iter().filter(|e| e.doc_id == doc.doc_id) {
                let end = e.offset + e.token_count;
                if end > tokens.len() {
                    return Err(Error::Config(format!(
                        "sample {} runs past the end of document {}",
                        e.sample_id, doc.doc_id
                    )));
                }
                let s = Sample::new(&doc.doc_id, doc.split, e.offset, tokens[e.offset..end].to_vec());
                if s.sample_id != e.sample_id {
                    return Err(Error::Config(format!("sample id mismatch for {}", e.sample_id)));
                }
                out.push(s);
            }
        }
        Ok(out)
    }
}
