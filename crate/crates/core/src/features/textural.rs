use crate::error::{Error, Result};
use crate::fbm::{estimate_hurst, DEFAULT_MAX_LAG};
use crate::field::GrayField;

/// Smallest patch giving the variogram fit at least three lags.
pub const MIN_PATCH_SIZE: usize = 12;

/// `[mean Ĥ, variance Ĥ]` over non-overlapping square patches.
///
/// Patches whose estimate fails (flat content) are skipped; at least two
/// must survive. The variance is the population variance.
pub fn textural_features(texture: &GrayField, patch_size: usize) -> Result<Vec<f64>> {
    let hs = patch_hurst(texture, patch_size)?;
    let n = hs.len() as f64;
    let mean = hs.iter().sum::<f64>() / n;
    let var = hs.iter().map(|h| (h - mean) * (h - mean)).sum::<f64>() / n;
    Ok(vec![mean, var])
}

/// Per-patch Hurst estimates in row-major patch order, failures skipped.
pub fn patch_hurst(texture: &GrayField, patch_size: usize) -> Result<Vec<f64>> {
    if patch_size < MIN_PATCH_SIZE {
        return Err(Error::invalid(format!(
            "patch size must be at least {MIN_PATCH_SIZE}, got {patch_size}"
        )));
    }
    let patches = texture.extract_patches(patch_size, patch_size)?;
    if patches.len() < 2 {
        return Err(Error::invalid(format!(
            "a {}x{} texture holds {} patch(es) of size {patch_size}; at least 2 needed",
            texture.width(),
            texture.height(),
            patches.len()
        )));
    }
    let lag = DEFAULT_MAX_LAG.min(patch_size / 4);
    let hs: Vec<f64> = patches
        .iter()
        .filter_map(|p| estimate_hurst(p, lag).ok())
        .map(|e| e.h_hat)
        .collect();
    if hs.len() < 2 {
        return Err(Error::degenerate(format!(
            "only {} of {} patches gave a Hurst estimate",
            hs.len(),
            patches.len()
        )));
    }
    Ok(hs)
}
