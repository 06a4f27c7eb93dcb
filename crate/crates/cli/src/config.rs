use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use digger_core::oracle::{Stage, TinyLmConfig};
use digger_core::pipeline::{AuditConfig, StudyConfig};
use digger_core::{Error, Result};
use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum OracleConfig {
    Builtin {
        #[serde(default)]
        model: TinyLmConfig,
    },
    External {
        /// Loss-record lines, relative to the config file.
        losses: PathBuf,
        /// Model id per stage.
        models: BTreeMap<Stage, String>,
    },
}

/// Configuration file of `audit run`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AuditRunConfig {
    /// Corpus manifest, relative to the config file.
    pub manifest: PathBuf,
    pub oracle: OracleConfig,
    #[serde(default)]
    pub audit: AuditConfig,
    /// Target documents added to the built-in vanilla model's background.
    #[serde(default)]
    pub planted_docs: Vec<String>,
    /// Target documents known to be seen; enables metrics.
    #[serde(default)]
    pub seen_docs: Option<Vec<String>>,
    /// Overrides the built-in model seed.
    #[serde(default)]
    pub seed: Option<u64>,
}

/// Configuration file of `study run`. Baseline samples are the learned set,
/// unlearned-I samples the unlearned set and spare samples the background.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct StudyRunConfig {
    pub manifest: PathBuf,
    pub study: StudyConfig,
    #[serde(default)]
    pub seed: Option<u64>,
}

pub fn load<T: serde::de::DeserializeOwned>(path: &Path) -> Result<T> {
    let text = std::fs::read_to_string(path).map_err(|e| Error::Io {
        path: path.to_path_buf(),
        source: e,
    })?;
    serde_json::from_str(&text).map_err(|e| Error::Config(format!("{}: {e}", path.display())))
}

/// `p` resolved against the directory holding `config`.
pub fn resolve(config: &Path, p: &Path) -> PathBuf {
    if p.is_absolute() {
        p.to_path_buf()
    } else {
        config.parent().unwrap_or(Path::new(".")).join(p)
    }
}
