use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// A sorted multiset of finite reals (gap units, nats/token).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "Vec<f64>", into = "Vec<f64>")]
pub struct EmpiricalDistribution {
    values: Vec<f64>,
}

impl EmpiricalDistribution {
    pub fn new(mut values: Vec<f64>) -> Result<Self> {
        if values.is_empty() {
            return Err(Error::EmptyDistribution("no values".into()));
        }
        if let Some(bad) = values.iter().find(|v| !v.is_finite()) {
            return Err(Error::Precondition(format!("non-finite value {bad} in distribution")));
        }
        values.sort_by(f64::total_cmp);
        Ok(EmpiricalDistribution { values })
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn count(&self) -> usize {
        self.values.len()
    }

    pub fn min(&self) -> f64 {
        self.values[0]
    }

    pub fn max(&self) -> f64 {
        self.values[self.values.len() - 1]
    }

    pub fn mean(&self) -> f64 {
        self.values.iter().sum::<f64>() / self.values.len() as f64
    }

    /// Left-continuous quantile function: the smallest value `x` with `F(x) >= u`.
    pub fn quantile(&self, u: f64) -> f64 {
        let n = self.values.len();
        let idx = (u * n as f64).ceil() as usize;
        self.values[idx.clamp(1, n) - 1]
    }

    pub fn summary(&self) -> Summary {
        let mean = self.mean();
        let var = self.values.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / self.count() as f64;
        Summary {
            count: self.count(),
            mean,
            std: var.sqrt(),
            min: self.min(),
            median: self.quantile(0.5),
            max: self.max(),
        }
    }
}

impl TryFrom<Vec<f64>> for EmpiricalDistribution {
    type Error = Error;

    fn try_from(values: Vec<f64>) -> Result<Self> {
        EmpiricalDistribution::new(values)
    }
}

impl From<EmpiricalDistribution> for Vec<f64> {
    fn from(d: EmpiricalDistribution) -> Self {
        d.values
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Summary {
    pub count: usize,
    pub mean: f64,
    pub std: f64,
    pub min: f64,
    pub median: f64,
    pub max: f64,
}

/// Translates every value by `delta`.
pub fn shift_distribution(d: &EmpiricalDistribution, delta: f64) -> EmpiricalDistribution {
    EmpiricalDistribution {
        values: d.values.iter().map(|v| v + delta).collect(),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn sorted_on_construction() {
        let d = EmpiricalDistribution::new(vec![3.0, -1.0, 2.0]).unwrap();
        assert_eq!(d.values(), &[-1.0, 2.0, 3.0]);
        assert!(EmpiricalDistribution::new(vec![]).is_err());
        assert!(EmpiricalDistribution::new(vec![f64::NAN]).is_err());
    }

    #[test]
    fn shifting() {
        let d = EmpiricalDistribution::new(vec![1.0, 2.0]).unwrap();
        assert_eq!(shift_distribution(&d, 0.0), d);
        assert_eq!(shift_distribution(&d, 0.5).values(), &[1.5, 2.5]);
    }

    #[test]
    fn quantiles() {
        let d = EmpiricalDistribution::new(vec![1.0, 2.0, 3.0, 4.0]).unwrap();
        assert_eq!(d.quantile(0.0), 1.0);
        assert_eq!(d.quantile(0.25), 1.0);
        assert_eq!(d.quantile(0.26), 2.0);
        assert_eq!(d.quantile(1.0), 4.0);
    }

    #[test]
    fn serde_round_trip_keeps_invariant() {
        let d = EmpiricalDistribution::new(vec![0.5, 0.25]).unwrap();
        let s = serde_json::to_string(&d).unwrap();
        assert_eq!(s, "[0.25,0.5]");
        assert_eq!(serde_json::from_str::<EmpiricalDistribution>("[0.5,0.25]").unwrap(), d);
        assert!(serde_json::from_str::<EmpiricalDistribution>("[]").is_err());
    }
}
