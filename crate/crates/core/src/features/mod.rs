//! Two-view features: textural statistics from the texture layer and
//! structural measures from the structure layer.

mod pc;
mod sth;
mod textural;

pub use pc::{phase_congruency, structural_feature_pc, Gamma, PcConfig};
pub use sth::{
    connected_components, hist_equalize, quantize, sth_area, sth_detect, Component, Connectivity,
    SthConfig, SthResult,
};
pub use textural::{patch_hurst, textural_features, MIN_PATCH_SIZE};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::field::GrayField;
use crate::rtv::{rtv_decompose, RtvConfig};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TwoViewFeatures {
    pub phi_t: Vec<f64>,
    pub phi_s: Vec<f64>,
    pub label: usize,
}

impl TwoViewFeatures {
    pub fn new(phi_t: Vec<f64>, phi_s: Vec<f64>, label: usize) -> Result<Self> {
        if phi_t.is_empty() || phi_s.is_empty() {
            return Err(Error::invalid("both feature views must be non-empty"));
        }
        if phi_t.iter().chain(&phi_s).any(|v| !v.is_finite()) {
            return Err(Error::invalid("features must be finite"));
        }
        Ok(Self {
            phi_t,
            phi_s,
            label,
        })
    }

    /// `phi_t ⊕ phi_s`.
    pub fn concatenated(&self) -> Vec<f64> {
        self.phi_t.iter().chain(&self.phi_s).copied().collect()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum StructuralMode {
    /// Mean phase congruency of the structure layer.
    Pc,
    /// STH object area divided by the image pixel count.
    Sth,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FeatureConfig {
    pub rtv: RtvConfig,
    pub patch_size: usize,
    pub structural: StructuralMode,
    pub pc: PcConfig,
    pub sth: SthConfig,
}

impl Default for FeatureConfig {
    fn default() -> Self {
        Self {
            rtv: RtvConfig::default(),
            patch_size: 32,
            structural: StructuralMode::Pc,
            pc: PcConfig::default(),
            sth: SthConfig::default(),
        }
    }
}

/// Decomposes `image` and extracts both views.
pub fn extract_features(
    image: &GrayField,
    label: usize,
    config: &FeatureConfig,
) -> Result<TwoViewFeatures> {
    let (structure, texture) = rtv_decompose(image, &config.rtv)?;
    features_from_layers(&structure, &texture, label, config)
}

/// Feature extraction from an existing decomposition.
pub fn features_from_layers(
    structure: &GrayField,
    texture: &GrayField,
    label: usize,
    config: &FeatureConfig,
) -> Result<TwoViewFeatures> {
    TwoViewFeatures::new(
        textural_features(texture, config.patch_size)?,
        structural_view(structure, config)?,
        label,
    )
}

pub fn structural_view(structure: &GrayField, config: &FeatureConfig) -> Result<Vec<f64>> {
    Ok(match config.structural {
        StructuralMode::Pc => structural_feature_pc(structure, &config.pc)?,
        StructuralMode::Sth => vec![sth_area(structure, &config.sth)? / structure.len() as f64],
    })
}
