use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub const SIGMA_FLOOR: f64 = 1e-9;

/// Maximum-likelihood normal fit.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct NormalFit {
    pub mu: f64,
    pub sigma: f64,
    /// Set when the raw standard deviation fell below [`SIGMA_FLOOR`].
    pub degenerate: bool,
}

/// `mu` = mean, `sigma` = population standard deviation, floored.
pub fn fit_normal(values: &[f64]) -> Result<NormalFit> {
    if values.len() < 2 {
        return Err(Error::Precondition(format!(
            "normal fit needs at least 2 values, got {}",
            values.len()
        )));
    }
    let n = values.len() as f64;
    let mu = values.iter().sum::<f64>() / n;
    let var = values.iter().map(|v| (v - mu) * (v - mu)).sum::<f64>() / n;
    let sigma = var.sqrt();
    Ok(if sigma < SIGMA_FLOOR {
        NormalFit {
            mu,
            sigma: SIGMA_FLOOR,
            degenerate: true,
        }
    } else {
        NormalFit {
            mu,
            sigma,
            degenerate: false,
        }
    })
}

/// `P(X >= x)` for `X ~ N(mu, sigma²)`; a step at `mu` for degenerate fits.
pub fn normal_survival(x: f64, fit: &NormalFit) -> f64 {
    if fit.degenerate {
        return match x.partial_cmp(&fit.mu) {
            Some(std::cmp::Ordering::Less) => 1.0,
            Some(std::cmp::Ordering::Greater) => 0.0,
            _ => 0.5,
        };
    }
    let z = (x - fit.mu) / fit.sigma;
    0.5 * statrs::function::erf::erfc(z / std::f64::consts::SQRT_2)
}
