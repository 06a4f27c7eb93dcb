//! Loss-gap membership inference for language models.
//!
//! The crate is organised around the audit workflow:
//!
//! * [`corpus`] ingests text, tokenizes it, extracts fixed-length passages and
//!   partitions documents into the baseline / unlearned-I / target /
//!   unlearned-II datasets.
//! * [`oracle`] defines [`oracle::LossOracle`], the thing that can be
//!   fine-tuned and asked for per-sample mean negative log-likelihood, with a
//!   deterministic built-in tiny language model and an external loss table.
//! * [`stats`] holds the distribution machinery: 1-D Wasserstein distance,
//!   ROC/AUC, normal fits and FPR-indexed thresholds.
//! * [`pipeline`] strings these together into the preparation, simulation and
//!   confidence phases, plus the repetition/token-length characteristic study.
//! * [`report`] renders histograms, confidence bins and CSV tables from stored
//!   reports.
//!
//! All losses are in nats per predicted token.

pub mod corpus;
pub mod error;
pub mod fingerprint;
pub mod oracle;
pub mod pipeline;
pub mod report;
pub mod stats;
pub mod synth;

pub use corpus::{Document, PassagePlan, Sample, Split, SplitPlan, TokenId, Tokenizer, TokenizerKind};
pub use error::{Error, Result};
pub use oracle::{
    BuiltinOracle, ExternalOracle, LossOracle, LossRecord, LossTable, ModelSnapshot, Stage, TinyLmConfig,
};
pub use pipeline::{AuditConfig, AuditReport, CalibrationResult, GapRecord, StageDistributions};
pub use stats::{DecisionPolicy, EmpiricalDistribution, NormalFit, RocCurve};
