//! Distribution machinery over loss gaps.
//!
//! Everything here is a pure function of its inputs.

mod distribution;
mod normal;
mod roc;
mod threshold;
mod wasserstein;

pub use distribution::{shift_distribution, EmpiricalDistribution, Summary};
pub use normal::{fit_normal, normal_survival, NormalFit, SIGMA_FLOOR};
pub use roc::{roc_auc, RocCurve};
pub use threshold::{realized_rate, threshold_for_fpr, DecisionPolicy};
pub use wasserstein::wasserstein_1d;
