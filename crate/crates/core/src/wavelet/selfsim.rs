use serde::{Deserialize, Serialize};

use super::distance::{kl_gaussian_zero_mean, pdf_distance_zero_mean, PdfMetric};
use super::haar::{haar_1d_details, haar_pyramid, Normalization};
use super::stats::{ml_sigma, LevelStats};
use crate::error::{Error, Result};
use crate::fbm::{estimate_hurst, DEFAULT_MAX_LAG};
use crate::field::GrayField;

const REPORT_LEVELS: usize = 3;

/// Shortest signal accepted by [`level_variance_ratio_check`].
pub const MIN_RATIO_SIGNAL_LEN: usize = 1 << 10;

/// Coarser levels with fewer coefficients than this are left out of the
/// ratio check: their variance estimates are too noisy to be useful.
pub const MIN_RATIO_COEFFS: usize = 64;

/// The finest level is skipped by the ratio check. Treating samples as
/// approximation coefficients biases it strongly (the level 1 to 2 ratio is
/// 1.5 instead of 2 for Brownian motion).
pub const FIRST_RATIO_LEVEL: usize = 2;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SelfSimDiagnostics {
    /// Variogram estimate of H used for the rescaled divergence.
    pub hurst_hat: Option<f64>,
    /// KL between level 1 and level 2 after rescaling level 2 by `2^{-H}`.
    pub kl_12_rescaled: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SelfSimReport {
    pub kl_12: f64,
    pub l1_13: f64,
    pub l2_13: f64,
    pub linf_13: f64,
    /// `Var(level j+1) / Var(level j)` for `j = 1, 2`.
    pub variance_ratios: Vec<f64>,
    pub levels: Vec<LevelStats>,
    pub diagnostics: SelfSimDiagnostics,
}

/// Three-level analysis of the marginal detail distributions of a field.
pub fn self_similarity_report(field: &GrayField) -> Result<SelfSimReport> {
    let pyr = haar_pyramid(field, REPORT_LEVELS, Normalization::Analysis)?;
    let levels = pyr
        .levels
        .iter()
        .map(|l| LevelStats::from_coefficients(l.level, &l.pooled_details()))
        .collect::<Result<Vec<_>>>()?;
    let s: Vec<f64> = levels.iter().map(|l| l.sigma_hat).collect();
    if let Some(l) = levels.iter().find(|l| l.sigma_hat <= 0.0) {
        return Err(Error::degenerate(format!(
            "level {} has no detail energy; the divergences are undefined",
            l.level
        )));
    }
    let kl_12 = kl_gaussian_zero_mean(s[0], s[1])?;
    let hurst_hat = {
        let side = field.width().min(field.height());
        let lag = DEFAULT_MAX_LAG.min(side / 4);
        estimate_hurst(field, lag).ok().map(|e| e.h_hat)
    };
    let kl_12_rescaled = match hurst_hat {
        Some(h) => Some(kl_gaussian_zero_mean(s[0], s[1] * 2f64.powf(-h))?),
        None => None,
    };
    Ok(SelfSimReport {
        kl_12,
        l1_13: pdf_distance_zero_mean(s[0], s[2], PdfMetric::L1)?,
        l2_13: pdf_distance_zero_mean(s[0], s[2], PdfMetric::L2)?,
        linf_13: pdf_distance_zero_mean(s[0], s[2], PdfMetric::Linf)?,
        variance_ratios: s.windows(2).map(|w| (w[1] / w[0]).powi(2)).collect(),
        levels,
        diagnostics: SelfSimDiagnostics {
            hurst_hat,
            kl_12_rescaled,
        },
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VarianceRatioCheck {
    pub normalization: Normalization,
    /// Level of the finer member of the first pair.
    pub first_level: usize,
    /// `Var(level j+1) / Var(level j)`, finest pair first.
    pub ratios: Vec<f64>,
    /// `2^{2H}` for the analysis convention, `2^{2H+1}` for orthonormal.
    pub expected: f64,
}

impl VarianceRatioCheck {
    pub fn mean_ratio(&self) -> f64 {
        self.ratios.iter().sum::<f64>() / self.ratios.len() as f64
    }
}

/// Adjacent-level detail variance ratios of a 1D signal.
///
/// Uses levels from [`FIRST_RATIO_LEVEL`] down to the last one holding at
/// least [`MIN_RATIO_COEFFS`] coefficients.
pub fn level_variance_ratio_check(
    signal: &[f64],
    hurst: f64,
    normalization: Normalization,
) -> Result<VarianceRatioCheck> {
    if signal.len() < MIN_RATIO_SIGNAL_LEN {
        return Err(Error::invalid(format!(
            "variance ratio check needs at least {MIN_RATIO_SIGNAL_LEN} samples, got {}",
            signal.len()
        )));
    }
    if !hurst.is_finite() {
        return Err(Error::invalid("Hurst exponent must be finite"));
    }
    let mut levels = 0;
    while signal.len() >> (levels + 1) >= MIN_RATIO_COEFFS {
        levels += 1;
    }
    let details = haar_1d_details(signal, levels, normalization)?;
    let vars = details
        .iter()
        .map(|d| ml_sigma(d).map(|s| s * s))
        .collect::<Result<Vec<f64>>>()?;
    if vars.iter().any(|&v| v <= 0.0) {
        return Err(Error::degenerate("a detail level has zero variance"));
    }
    let expected = match normalization {
        Normalization::Analysis => 2f64.powf(2.0 * hurst),
        Normalization::Orthonormal => 2f64.powf(2.0 * hurst + 1.0),
    };
    Ok(VarianceRatioCheck {
        normalization,
        first_level: FIRST_RATIO_LEVEL,
        ratios: vars[FIRST_RATIO_LEVEL - 1..]
            .windows(2)
            .map(|w| w[1] / w[0])
            .collect(),
        expected,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn checkerboard_is_far_from_self_similar() {
        let f = GrayField::from_fn(32, 32, |x, y| {
            let base = if (x + y) % 2 == 0 { 1.0 } else { 0.0 };
            base + 1e-3 * (x + 2 * y) as f64
        });
        let r = self_similarity_report(&f).unwrap();
        assert!(r.kl_12 > 1.0, "{}", r.kl_12);
    }

    #[test]
    fn pure_checkerboard_has_empty_coarse_levels() {
        let f = GrayField::from_fn(32, 32, |x, y| ((x + y) % 2) as f64);
        assert!(matches!(
            self_similarity_report(&f),
            Err(Error::Degenerate(_))
        ));
    }

    #[test]
    fn constant_and_tiny_fields_are_rejected() {
        assert!(self_similarity_report(&GrayField::constant(16, 16, 0.5)).is_err());
        assert!(self_similarity_report(&GrayField::constant(7, 16, 0.5)).is_err());
    }

    #[test]
    fn report_shape() {
        let p = crate::fbm::FbmParams::new(0.5, 1.0).unwrap();
        let f = crate::fbm::synth_fbm_exact(&p, 32, 3).unwrap();
        let r = self_similarity_report(&f).unwrap();
        assert_eq!(r.levels.len(), 3);
        assert_eq!(r.variance_ratios.len(), 2);
        assert_eq!(r.levels[0].count, 3 * 16 * 16);
        assert!(r.diagnostics.hurst_hat.is_some());
        let kl = kl_gaussian_zero_mean(r.levels[0].sigma_hat, r.levels[1].sigma_hat).unwrap();
        assert_eq!(r.kl_12, kl);
    }

    #[test]
    fn ratio_check_levels_and_errors() {
        let sig: Vec<f64> = (0..4096).map(|i| ((i * 7919) % 101) as f64).collect();
        let c = level_variance_ratio_check(&sig, 0.5, Normalization::Analysis).unwrap();
        // levels 2..=6 are used
        assert_eq!(c.ratios.len(), 4);
        assert_eq!(c.first_level, 2);
        assert_eq!(c.expected, 2.0);
        assert!(level_variance_ratio_check(&sig[..1000], 0.5, Normalization::Analysis).is_err());
    }
}
