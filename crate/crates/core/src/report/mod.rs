//! Report emission: histogram and confidence-bin data, and CSV tables that
//! can all be regenerated from a stored report without re-running a model.

mod bins;
mod histogram;
mod tables;

pub use bins::{confidence_bin, render_confidence_bins, ConfidenceBin, CONFIDENCE_BINS};
pub use histogram::{render_histogram, HistogramRange, HistogramSpec};
pub use tables::{
    audit_table, parse_csv, render_csv, study_table, AucRow, BinRow, HistogramRow, LossCurveRow, ScoreRow, TableKind,
    ThresholdRow,
};
