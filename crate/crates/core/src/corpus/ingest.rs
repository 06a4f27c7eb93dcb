use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use rayon::prelude::*;

use super::{Document, Tokenizer, TokenizerKind};
use crate::error::{Error, Result};
use crate::fingerprint::sha256_hex;

/// Regular `*.txt` files directly inside `dir`, sorted by path.
pub fn list_text_files(dir: &Path) -> Result<Vec<PathBuf>> {
    let entries = std::fs::read_dir(dir).map_err(|e| Error::io(dir, e))?;
    let mut paths = Vec::new();
    for entry in entries {
        let path = entry.map_err(|e| Error::io(dir, e))?.path();
        if path.is_file() && path.extension().is_some_and(|ext| ext == "txt") {
            paths.push(path);
        }
    }
    paths.sort();
    Ok(paths)
}

struct RawDoc {
    doc_id: String,
    title: String,
    source: PathBuf,
    text: String,
    lossy_replacements: usize,
    digest: String,
}

fn read_raw(path: &Path) -> Result<RawDoc> {
    let bytes = std::fs::read(path).map_err(|e| Error::io(path, e))?;
    let doc_id = path
        .file_stem()
        .map(|s| s.to_string_lossy().into_owned())
        .unwrap_or_else(|| path.display().to_string());
    if bytes.is_empty() {
        return Err(Error::EmptyDocument { doc_id });
    }
    let digest = sha256_hex(&bytes);
    let (text, lossy_replacements) = match String::from_utf8(bytes) {
        Ok(text) => (text, 0),
        Err(e) => {
            let text = String::from_utf8_lossy(e.as_bytes()).into_owned();
            let n = text.chars().filter(|&c| c == char::REPLACEMENT_CHARACTER).count();
            (text, n)
        }
    };
    let title = text
        .lines()
        .map(str::trim)
        .find(|l| !l.is_empty())
        .map(|l| l.chars().take(80).collect())
        .unwrap_or_else(|| doc_id.clone());
    Ok(RawDoc {
        doc_id,
        title,
        source: path.to_path_buf(),
        text,
        lossy_replacements,
        digest,
    })
}

/// Reads and tokenizes one document per file. Documents come back ordered by
/// path; the document id is the file stem. Word vocabularies are fitted on
/// the whole input set.
pub fn ingest_documents(paths: &[PathBuf], kind: TokenizerKind) -> Result<(Vec<Document>, Tokenizer)> {
    let mut sorted = paths.to_vec();
    sorted.sort();
    let raws = sorted.iter().map(|p| read_raw(p)).collect::<Result<Vec<_>>>()?;

    let mut ids: BTreeMap<&str, &Path> = BTreeMap::new();
    for raw in &raws {
        if let Some(first) = ids.insert(&raw.doc_id, &raw.source) {
            return Err(Error::DuplicateDocument {
                doc_id: raw.doc_id.clone(),
                first: first.to_path_buf(),
                second: raw.source.clone(),
            });
        }
    }

    let tokenizer = Tokenizer::fit(kind, raws.iter().map(|r| r.text.as_str()));
    let docs = raws
        .into_par_iter()
        .map(|raw| Document {
            tokens: tokenizer.encode(&raw.text),
            doc_id: raw.doc_id,
            title: raw.title,
            source: raw.source,
            text: raw.text,
            lossy_replacements: raw.lossy_replacements,
            digest: raw.digest,
        })
        .collect();
    Ok((docs, tokenizer))
}
