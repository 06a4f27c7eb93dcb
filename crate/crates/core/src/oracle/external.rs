//! Read-only oracle over exported loss records.
//!
//! Wire format: one JSON object per line,
//!
//! ```text
//! {"sample_id": "...", "model_id": "...", "token_count": 128, "mean_nll": 3.25, "per_token_nll": [...]}
//! ```
//!
//! `mean_nll` is in nats per predicted token. The first token of a sample is
//! never predicted, so `per_token_nll`, when present, holds
//! `token_count - CONTEXT_OFFSET` values whose mean equals `mean_nll`.

use std::collections::BTreeMap;
use std::io::BufRead;
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::{dataset_fingerprint, LineageEntry, LossOracle, ModelSnapshot, Stage};
use crate::corpus::Sample;
use crate::error::{Error, Result};
use crate::fingerprint::Fingerprint;

pub const CONTEXT_OFFSET: usize = 1;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LossRecord {
    pub sample_id: String,
    pub model_id: String,
    pub token_count: usize,
    pub mean_nll: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub per_token_nll: Option<Vec<f64>>,
}

impl LossRecord {
    pub fn validate(&self) -> std::result::Result<(), String> {
        if !(self.mean_nll.is_finite() && self.mean_nll >= 0.0) {
            return Err(format!(
                "mean_nll {} is not a finite non-negative number",
                self.mean_nll
            ));
        }
        if let Some(per_token) = &self.per_token_nll {
            let expected = self.token_count.saturating_sub(CONTEXT_OFFSET);
            if per_token.len() != expected {
                return Err(format!(
                    "per_token_nll has {} values, expected token_count - {CONTEXT_OFFSET} = {expected}",
                    per_token.len()
                ));
            }
            if per_token.iter().any(|v| !(v.is_finite() && *v >= 0.0)) {
                return Err("per_token_nll contains a negative or non-finite value".into());
            }
            if !per_token.is_empty() {
                let mean = per_token.iter().sum::<f64>() / per_token.len() as f64;
                if (mean - self.mean_nll).abs() > 1e-9 * self.mean_nll.max(1.0) {
                    return Err(format!(
                        "per_token_nll mean {mean} disagrees with mean_nll {}",
                        self.mean_nll
                    ));
                }
            }
        }
        Ok(())
    }
}

/// Loss records keyed by `(sample_id, model_id)`.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct LossTable {
    records: BTreeMap<(String, String), LossRecord>,
}

impl LossTable {
    pub fn load(path: &Path) -> Result<Self> {
        let file = std::fs::File::open(path).map_err(|e| Error::io(path, e))?;
        Self::parse(std::io::BufReader::new(file))
    }

    /// Parses the line format. Blank lines are skipped; an exact duplicate of
    /// an earlier record is accepted, a conflicting one is an error.
    pub fn parse(reader: impl BufRead) -> Result<Self> {
        let mut table = LossTable::default();
        for (i, line) in reader.lines().enumerate() {
            let line_no = i + 1;
            let line = line.map_err(|e| Error::MalformedRecord {
                line: line_no,
                message: e.to_string(),
            })?;
            if line.trim().is_empty() {
                continue;
            }
            let record: LossRecord = serde_json::from_str(&line).map_err(|e| Error::MalformedRecord {
                line: line_no,
                message: e.to_string(),
            })?;
            record
                .validate()
                .map_err(|message| Error::MalformedRecord { line: line_no, message })?;
            let key = (record.sample_id.clone(), record.model_id.clone());
            match table.records.get(&key) {
                Some(existing) if existing != &record => {
                    return Err(Error::ConflictingRecord {
                        line: line_no,
                        sample_id: key.0,
                        model_id: key.1,
                    })
                }
                Some(_) => {}
                None => {
                    table.records.insert(key, record);
                }
            }
        }
        Ok(table)
    }

    pub fn insert(&mut self, record: LossRecord) -> Result<()> {
        record.validate().map_err(Error::Precondition)?;
        self.records
            .insert((record.sample_id.clone(), record.model_id.clone()), record);
        Ok(())
    }

    /// Recorded mean NLL, or `None` when the pair is absent.
    pub fn lookup(&self, sample_id: &str, model_id: &str) -> Option<f64> {
        self.records
            .get(&(sample_id.to_string(), model_id.to_string()))
            .map(|r| r.mean_nll)
    }

    pub fn len(&self) -> usize {
        self.records.len()
    }

    pub fn is_empty(&self) -> bool {
        self.records.is_empty()
    }

    pub fn records(&self) -> impl Iterator<Item = &LossRecord> {
        self.records.values()
    }

    /// Distinct model ids, sorted.
    pub fn model_ids(&self) -> Vec<String> {
        let mut ids: Vec<String> = self.records.keys().map(|(_, m)| m.clone()).collect();
        ids.dedup();
        ids.sort();
        ids.dedup();
        ids
    }

    /// Serializes to the line format, sorted by `(sample_id, model_id)`.
    pub fn to_lines(&self) -> Result<String> {
        let mut out = String::new();
        for r in self.records.values() {
            out.push_str(&serde_json::to_string(r)?);
            out.push('\n');
        }
        Ok(out)
    }
}

/// Oracle over a [`LossTable`], with one configured model id per stage.
/// "Fine-tuning" only selects the next model id and records lineage; the
/// actual training happened wherever the losses were exported from.
#[derive(Debug, Clone)]
pub struct ExternalOracle {
    table: LossTable,
    models: BTreeMap<Stage, String>,
}

impl ExternalOracle {
    pub fn new(table: LossTable, models: BTreeMap<Stage, String>) -> Result<Self> {
        if let Some(missing) = Stage::ALL.into_iter().find(|s| !models.contains_key(s)) {
            return Err(Error::Config(format!("no model id configured for stage {missing}")));
        }
        Ok(ExternalOracle { table, models })
    }

    pub fn table(&self) -> &LossTable {
        &self.table
    }

    fn snapshot(&self, stage: Stage, lineage: Vec<LineageEntry>) -> ModelSnapshot {
        ModelSnapshot {
            model_id: self.models[&stage].clone(),
            stage,
            lineage,
            seed: 0,
            config: None,
            parameters: None,
        }
    }
}

impl LossOracle for ExternalOracle {
    fn name(&self) -> &'static str {
        "external"
    }

    fn fingerprint(&self) -> String {
        let mut fp = Fingerprint::new("external-oracle");
        for (stage, id) in &self.models {
            fp.str(stage.as_str()).str(id);
        }
        for r in self.table.records() {
            fp.str(&r.sample_id)
                .str(&r.model_id)
                .u64(r.token_count as u64)
                .f64(r.mean_nll);
        }
        fp.hex()
    }

    fn vanilla(&self, _background: &[Sample]) -> Result<ModelSnapshot> {
        Ok(self.snapshot(Stage::Vanilla, Vec::new()))
    }

    fn finetune_passes(&self) -> u32 {
        1
    }

    fn fine_tune(&self, base: &ModelSnapshot, samples: &[Sample], passes: u32, stage: Stage) -> Result<ModelSnapshot> {
        if passes < 1 {
            return Err(Error::Precondition("fine-tuning needs at least one pass".into()));
        }
        if samples.is_empty() {
            return Err(Error::Precondition(format!("no samples for the {stage} model")));
        }
        let mut lineage = base.lineage.clone();
        lineage.push(LineageEntry {
            stage,
            dataset: dataset_fingerprint(samples),
            samples: samples.len(),
            passes,
            hyperparameters: BTreeMap::new(),
        });
        Ok(self.snapshot(stage, lineage))
    }

    fn sample_loss(&self, snapshot: &ModelSnapshot, sample: &Sample) -> Result<f64> {
        self.table
            .lookup(&sample.sample_id, &snapshot.model_id)
            .ok_or_else(|| Error::MissingLoss {
                sample_id: sample.sample_id.clone(),
                model_id: snapshot.model_id.clone(),
            })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn parse(s: &str) -> Result<LossTable> {
        LossTable::parse(s.as_bytes())
    }

    #[test]
    fn round_trip_lookup() {
        let t = parse(r#"{"sample_id":"s1","model_id":"mA","token_count":3,"mean_nll":3.25}"#).unwrap();
        assert_eq!(t.lookup("s1", "mA"), Some(3.25));
        assert_eq!(t.lookup("s2", "mA"), None);
    }

    #[test]
    fn conflicting_duplicate_names_second_line() {
        let text = concat!(
            r#"{"sample_id":"s1","model_id":"mA","token_count":3,"mean_nll":3.25}"#,
            "\n",
            r#"{"sample_id":"s1","model_id":"mA","token_count":3,"mean_nll":3.30}"#,
            "\n"
        );
        match parse(text).unwrap_err() {
            Error::ConflictingRecord { line, .. } => assert_eq!(line, 2),
            e => panic!("unexpected {e}"),
        }
    }

    #[test]
    fn identical_duplicate_is_accepted() {
        let line = r#"{"sample_id":"s1","model_id":"mA","token_count":3,"mean_nll":3.25}"#;
        let t = parse(&format!("{line}\n\n{line}\n")).unwrap();
        assert_eq!(t.len(), 1);
    }

    #[test]
    fn malformed_line_reports_line_number() {
        let text = "{\"sample_id\":\"s1\",\"model_id\":\"mA\",\"token_count\":3,\"mean_nll\":1.0}\nnot json\n";
        match parse(text).unwrap_err() {
            Error::MalformedRecord { line, .. } => assert_eq!(line, 2),
            e => panic!("unexpected {e}"),
        }
    }

    #[test]
    fn per_token_consistency_is_enforced() {
        let ok = r#"{"sample_id":"s","model_id":"m","token_count":3,"mean_nll":1.0397207708399179,"per_token_nll":[0.6931471805599453,1.3862943611198906]}"#;
        assert!(parse(ok).is_ok());
        let wrong_mean = r#"{"sample_id":"s","model_id":"m","token_count":3,"mean_nll":1.2,"per_token_nll":[0.6931471805599453,1.3862943611198906]}"#;
        assert!(matches!(parse(wrong_mean), Err(Error::MalformedRecord { line: 1, .. })));
        let wrong_len = r#"{"sample_id":"s","model_id":"m","token_count":5,"mean_nll":1.0,"per_token_nll":[1.0,1.0]}"#;
        assert!(parse(wrong_len).is_err());
        let negative = r#"{"sample_id":"s","model_id":"m","token_count":3,"mean_nll":-0.5}"#;
        assert!(parse(negative).is_err());
    }

    #[test]
    fn missing_pair_is_a_named_error_for_the_oracle() {
        let t = parse(r#"{"sample_id":"s1","model_id":"v","token_count":3,"mean_nll":3.25}"#).unwrap();
        let models = Stage::ALL
            .into_iter()
            .map(|s| (s, s.as_str().replace("vanilla", "v")))
            .collect();
        let oracle = ExternalOracle::new(t, models).unwrap();
        let v = oracle.vanilla(&[]).unwrap();
        let s = Sample::new("d", crate::corpus::Split::Target, 0, vec![1, 2, 3]);
        match oracle.sample_loss(&v, &s).unwrap_err() {
            Error::MissingLoss { sample_id, model_id } => {
                assert_eq!(sample_id, s.sample_id);
                assert_eq!(model_id, "v");
            }
            e => panic!("unexpected {e}"),
        }
    }

    #[test]
    fn lines_round_trip() {
        let mut t = LossTable::default();
        t.insert(LossRecord {
            sample_id: "s".into(),
            model_id: "m".into(),
            token_count: 3,
            mean_nll: 0.35,
            per_token_nll: Some(vec![0.3, 0.4]),
        })
        .unwrap();
        let back = LossTable::parse(t.to_lines().unwrap().as_bytes()).unwrap();
        assert_eq!(back, t);
    }
}
