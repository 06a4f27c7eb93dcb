//! The audit workflow: preparation (baseline and reference models),
//! simulation (reference-tuned and vanilla-tuned models and their loss-gap
//! distributions) and confidence calculation (Wasserstein calibration, normal
//! fit, FPR-indexed classification). Also hosts the repetition/token-length
//! characteristic study.

mod audit;
mod confidence;
mod gaps;
mod phases;
mod study;

pub use audit::{audit, AuditConfig, AuditInputs, AuditReport, ScoredSample, REPORT_VERSION};
pub use confidence::{
    calibrate, classify, confidence_score, CalibrationResult, Classification, ConfidenceSet, Metrics,
};
pub use gaps::{compute_gaps, GapRecord, GapTransform};
pub use phases::{build_baseline, build_reference, simulate, SimulationOutcome, StageDistributions};
pub use study::{
    characteristic_study, AucCell, LossPoint, ModelVariant, StudyConfig, StudyInputs, StudyReport, VariantReport,
};
