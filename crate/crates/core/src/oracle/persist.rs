//! Versioned binary snapshot dump.
//!
//! Layout (little endian):
//!
//! | bytes        | content                                         |
//! |--------------|-------------------------------------------------|
//! | 8            | magic `DIGSNAP\0`                               |
//! | 4            | format version (`1`)                            |
//! | 8            | header length `h`                               |
//! | h            | JSON header: model id, stage, seed, config, lineage |
//! | 8            | parameter count `p`                             |
//! | 8·p          | parameters as raw `f64` bits                    |
//!
//! Parameters are stored as bits, so a round trip is exact.

use std::path::Path;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use super::builtin::model_id;
use super::{LineageEntry, ModelSnapshot, Stage, TinyLm, TinyLmConfig};
use crate::error::{Error, Result};

const MAGIC: &[u8; 8] = b"DIGSNAP\0";
const VERSION: u32 = 1;

#[derive(Serialize, Deserialize)]
struct Header {
    model_id: String,
    stage: Stage,
    seed: u64,
    config: TinyLmConfig,
    lineage: Vec<LineageEntry>,
}

pub fn snapshot_to_bytes(snapshot: &ModelSnapshot) -> Result<Vec<u8>> {
    let (Some(config), Some(lm)) = (snapshot.config, snapshot.parameters.as_ref()) else {
        return Err(Error::Snapshot(format!(
            "snapshot {} has no built-in parameters to persist",
            snapshot.model_id
        )));
    };
    let header = serde_json::to_vec(&Header {
        model_id: snapshot.model_id.clone(),
        stage: snapshot.stage,
        seed: snapshot.seed,
        config,
        lineage: snapshot.lineage.clone(),
    })?;
    let params = lm.params();
    let mut out = Vec::with_capacity(28 + header.len() + 8 * params.len());
    out.extend_from_slice(MAGIC);
    out.extend_from_slice(&VERSION.to_le_bytes());
    out.extend_from_slice(&(header.len() as u64).to_le_bytes());
    out.extend_from_slice(&header);
    out.extend_from_slice(&(params.len() as u64).to_le_bytes());
    for p in params {
        out.extend_from_slice(&p.to_bits().to_le_bytes());
    }
    Ok(out)
}

struct Reader<'a> {
    buf: &'a [u8],
}

impl<'a> Reader<'a> {
    fn take(&mut self, n: usize) -> Result<&'a [u8]> {
        if self.buf.len() < n {
            return Err(Error::Snapshot("truncated snapshot".into()));
        }
        let (head, rest) = self.buf.split_at(n);
        self.buf = rest;
        Ok(head)
    }

    fn u64(&mut self) -> Result<u64> {
        Ok(u64::from_le_bytes(self.take(8)?.try_into().expect("8 bytes")))
    }
}

pub fn snapshot_from_bytes(bytes: &[u8]) -> Result<ModelSnapshot> {
    let mut r = Reader { buf: bytes };
    if r.take(8)? != MAGIC {
        return Err(Error::Snapshot("not a snapshot file (bad magic)".into()));
    }
    let version = u32::from_le_bytes(r.take(4)?.try_into().expect("4 bytes"));
    if version != VERSION {
        return Err(Error::Snapshot(format!("unsupported snapshot version {version}")));
    }
    let header_len = r.u64()? as usize;
    let header: Header = serde_json::from_slice(r.take(header_len)?)?;
    let count = r.u64()? as usize;
    let raw = r.take(
        count
            .checked_mul(8)
            .ok_or_else(|| Error::Snapshot("bad parameter count".into()))?,
    )?;
    if !r.buf.is_empty() {
        return Err(Error::Snapshot("trailing bytes after parameters".into()));
    }
    let params = raw
        .chunks_exact(8)
        .map(|c| f64::from_bits(u64::from_le_bytes(c.try_into().expect("8 bytes"))))
        .collect();
    let lm = TinyLm::from_parts(header.config, params)?;
    let expected = model_id(&header.config, &header.lineage);
    if expected != header.model_id {
        return Err(Error::Snapshot(format!(
            "model id {} does not match its lineage ({expected})",
            header.model_id
        )));
    }
    Ok(ModelSnapshot {
        model_id: header.model_id,
        stage: header.stage,
        lineage: header.lineage,
        seed: header.seed,
        config: Some(header.config),
        parameters: Some(Arc::new(lm)),
    })
}

pub fn save_snapshot(snapshot: &ModelSnapshot, path: &Path) -> Result<()> {
    std::fs::write(path, snapshot_to_bytes(snapshot)?).map_err(|e| Error::io(path, e))
}

pub fn load_snapshot(path: &Path) -> Result<ModelSnapshot> {
    let bytes = std::fs::read(path).map_err(|e| Error::io(path, e))?;
    snapshot_from_bytes(&bytes)
}
