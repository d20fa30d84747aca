use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Per-dimension z-scoring with constants fitted on a training set.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Standardizer {
    pub mean: Vec<f64>,
    /// Population standard deviation; 1 for constant dimensions.
    pub std: Vec<f64>,
}

impl Standardizer {
    pub fn fit(rows: &[Vec<f64>]) -> Result<Self> {
        let first = rows
            .first()
            .ok_or_else(|| Error::invalid("cannot standardize an empty set"))?;
        let dim = first.len();
        if dim == 0 {
            return Err(Error::invalid("feature vectors must be non-empty"));
        }
        for r in rows {
            if r.len() != dim {
                return Err(Error::invalid(format!(
                    "inconsistent feature dimension: {} vs {dim}",
                    r.len()
                )));
            }
            if r.iter().any(|v| !v.is_finite()) {
                return Err(Error::invalid("non-finite feature value"));
            }
        }
        let n = rows.len() as f64;
        let mean: Vec<f64> = (0..dim)
            .map(|d| rows.iter().map(|r| r[d]).sum::<f64>() / n)
            .collect();
        let std = (0..dim)
            .map(|d| {
                let v = rows.iter().map(|r| (r[d] - mean[d]).powi(2)).sum::<f64>() / n;
                let s = v.sqrt();
                if s > 1e-12 * mean[d].abs().max(1.0) {
                    s
                } else {
                    1.0
                }
            })
            .collect();
        Ok(Self { mean, std })
    }

    pub fn dim(&self) -> usize {
        self.mean.len()
    }

    pub fn apply(&self, x: &[f64]) -> Result<Vec<f64>> {
        if x.len() != self.dim() {
            return Err(Error::invalid(format!(
                "expected {} features, got {}",
                self.dim(),
                x.len()
            )));
        }
        Ok(x.iter()
            .zip(&self.mean)
            .zip(&self.std)
            .map(|((v, m), s)| (v - m) / s)
            .collect())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn zero_mean_unit_variance() {
        let rows = vec![vec![1.0, 5.0], vec![3.0, 5.0], vec![5.0, 5.0]];
        let s = Standardizer::fit(&rows).unwrap();
        let z: Vec<Vec<f64>> = rows.iter().map(|r| s.apply(r).unwrap()).collect();
        let m: f64 = z.iter().map(|r| r[0]).sum::<f64>() / 3.0;
        let v: f64 = z.iter().map(|r| r[0] * r[0]).sum::<f64>() / 3.0;
        assert!(m.abs() < 1e-12 && (v - 1.0).abs() < 1e-12);
        assert!(z.iter().all(|r| r[1] == 0.0));
        assert!(s.apply(&[1.0]).is_err());
        assert!(Standardizer::fit(&[]).is_err());
    }
}
