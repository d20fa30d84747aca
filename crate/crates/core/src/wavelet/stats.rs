use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LevelStats {
    pub level: usize,
    /// Zero-mean maximum-likelihood standard deviation of the pooled details.
    pub sigma_hat: f64,
    pub count: usize,
    /// `None` when the level has fewer than 4 coefficients or zero variance.
    pub excess_kurtosis: Option<f64>,
}

impl LevelStats {
    pub fn from_coefficients(level: usize, coeffs: &[f64]) -> Result<Self> {
        Ok(Self {
            level,
            sigma_hat: ml_sigma(coeffs)?,
            count: coeffs.len(),
            excess_kurtosis: excess_kurtosis(coeffs).ok(),
        })
    }
}

/// `√(mean of squares)`, the ML scale of a zero-mean Gaussian sample.
pub fn ml_sigma(coeffs: &[f64]) -> Result<f64> {
    if coeffs.len() < 2 {
        return Err(Error::invalid(format!(
            "ML sigma needs at least 2 values, got {}",
            coeffs.len()
        )));
    }
    Ok((coeffs.iter().map(|c| c * c).sum::<f64>() / coeffs.len() as f64).sqrt())
}

/// `m4 / m2² − 3` with central moments.
pub fn excess_kurtosis(values: &[f64]) -> Result<f64> {
    if values.len() < 4 {
        return Err(Error::invalid(format!(
            "kurtosis needs at least 4 values, got {}",
            values.len()
        )));
    }
    let n = values.len() as f64;
    let mean = values.iter().sum::<f64>() / n;
    let (mut m2, mut m4) = (0.0, 0.0);
    for v in values {
        let d = (v - mean) * (v - mean);
        m2 += d;
        m4 += d * d;
    }
    m2 /= n;
    m4 /= n;
    let scale = values
        .iter()
        .fold(0.0f64, |m, v| m.max(v.abs()))
        .max(f64::MIN_POSITIVE);
    if m2 <= (1e-12 * scale).powi(2) {
        return Err(Error::degenerate("kurtosis of a constant sample"));
    }
    Ok(m4 / (m2 * m2) - 3.0)
}
