use std::str::FromStr;

use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::pipeline::{AuditReport, StudyReport};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum TableKind {
    Thresholds,
    Bins,
    Targets,
    Histograms,
    LossCurve,
    AucGrid,
}

impl TableKind {
    pub const ALL: [TableKind; 6] = [
        TableKind::Thresholds,
        TableKind::Bins,
        TableKind::Targets,
        TableKind::Histograms,
        TableKind::LossCurve,
        TableKind::AucGrid,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            TableKind::Thresholds => "thresholds",
            TableKind::Bins => "bins",
            TableKind::Targets => "targets",
            TableKind::Histograms => "histograms",
            TableKind::LossCurve => "loss-curve",
            TableKind::AucGrid => "auc-grid",
        }
    }
}

impl FromStr for TableKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        TableKind::ALL
            .into_iter()
            .find(|k| k.as_str() == s)
            .ok_or_else(|| Error::Config(format!("unknown table {s:?}")))
    }
}

/// Percentages, like the metric columns of a results table.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ThresholdRow {
    #[serde(rename = "FPR")]
    pub fpr: f64,
    #[serde(rename = "Threshold")]
    pub threshold: f64,
    #[serde(rename = "Acc")]
    pub acc: Option<f64>,
    #[serde(rename = "TPR")]
    pub tpr: Option<f64>,
    #[serde(rename = "FNR")]
    pub fnr: Option<f64>,
    #[serde(rename = "F1")]
    pub f1: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BinRow {
    pub interval: String,
    pub lo: f64,
    pub hi: f64,
    pub count: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScoreRow {
    pub sample_id: String,
    pub doc_id: String,
    pub gap: f64,
    pub confidence: f64,
    pub seen: Option<bool>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HistogramRow {
    pub distribution: String,
    pub bin: usize,
    pub lo: f64,
    pub hi: f64,
    pub count: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LossCurveRow {
    pub variant: String,
    pub repeats: u32,
    pub mean_loss: f64,
    pub loss_change: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AucRow {
    pub variant: String,
    pub repeats: u32,
    pub eval_len: usize,
    pub auc: f64,
}

pub fn render_csv<T: Serialize>(rows: &[T]) -> Result<String> {
    let mut w = csv::Writer::from_writer(Vec::new());
    for r in rows {
        w.serialize(r)?;
    }
    let bytes = w.into_inner().map_err(|e| Error::Precondition(e.to_string()))?;
    String::from_utf8(bytes).map_err(|e| Error::Precondition(e.to_string()))
}

pub fn parse_csv<T: DeserializeOwned>(text: &str) -> Result<Vec<T>> {
    csv::Reader::from_reader(text.as_bytes())
        .deserialize()
        .map(|r| r.map_err(Error::from))
        .collect()
}

fn pct(x: f64) -> f64 {
    100.0 * x
}

pub(crate) fn threshold_rows(report: &AuditReport) -> Vec<ThresholdRow> {
    report
        .classifications
        .iter()
        .map(|c| ThresholdRow {
            fpr: pct(c.fpr_target),
            threshold: c.threshold,
            acc: c.metrics.map(|m| pct(m.accuracy)),
            tpr: c.metrics.and_then(|m| m.tpr).map(pct),
            fnr: c.metrics.and_then(|m| m.fnr).map(pct),
            f1: c.metrics.and_then(|m| m.f1).map(pct),
        })
        .collect()
}

/// A CSV table regenerated from a stored audit report.
pub fn audit_table(report: &AuditReport, kind: TableKind) -> Result<String> {
    match kind {
        TableKind::Thresholds => render_csv(&threshold_rows(report)),
        TableKind::Bins => render_csv(
            &report
                .confidence_bins
                .iter()
                .map(|b| BinRow {
                    interval: b.interval.clone(),
                    lo: b.lo,
                    hi: b.hi,
                    count: b.count,
                })
                .collect::<Vec<_>>(),
        ),
        TableKind::Targets => render_csv(
            &report
                .targets
                .iter()
                .map(|s| ScoreRow {
                    sample_id: s.sample_id.clone(),
                    doc_id: s.doc_id.clone(),
                    gap: s.gap,
                    confidence: s.confidence,
                    seen: s.seen,
                })
                .collect::<Vec<_>>(),
        ),
        TableKind::Histograms => {
            let mut rows = Vec::new();
            for (name, h) in &report.histograms {
                for (bin, &count) in h.counts.iter().enumerate() {
                    let (lo, hi) = h.edges(bin);
                    rows.push(HistogramRow {
                        distribution: name.clone(),
                        bin,
                        lo,
                        hi,
                        count,
                    });
                }
            }
            render_csv(&rows)
        }
        k => Err(Error::Config(format!(
            "table {} is not available for audit reports",
            k.as_str()
        ))),
    }
}

/// A CSV table regenerated from a stored study report.
pub fn study_table(report: &StudyReport, kind: TableKind) -> Result<String> {
    match kind {
        TableKind::LossCurve => render_csv(
            &report
                .variants
                .iter()
                .flat_map(|v| {
                    v.loss_curve.iter().map(|p| LossCurveRow {
                        variant: v.name.clone(),
                        repeats: p.repeats,
                        mean_loss: p.mean_loss,
                        loss_change: p.loss_change,
                    })
                })
                .collect::<Vec<_>>(),
        ),
        TableKind::AucGrid => render_csv(
            &report
                .variants
                .iter()
                .flat_map(|v| {
                    v.auc_grid.iter().map(|c| AucRow {
                        variant: v.name.clone(),
                        repeats: c.repeats,
                        eval_len: c.eval_len,
                        auc: c.auc,
                    })
                })
                .collect::<Vec<_>>(),
        ),
        k => Err(Error::Config(format!(
            "table {} is not available for study reports",
            k.as_str()
        ))),
    }
}
