//! Haar multiresolution analysis and scale self-similarity measures.

mod distance;
mod haar;
mod selfsim;
mod stats;

pub use distance::{kl_gaussian_zero_mean, pdf_distance_zero_mean, PdfMetric, GRID_POINTS};
pub use haar::{haar_1d_details, haar_pyramid, Normalization, PyramidLevel, WaveletPyramid};
pub use selfsim::{
    level_variance_ratio_check, self_similarity_report, SelfSimDiagnostics, SelfSimReport,
    VarianceRatioCheck, FIRST_RATIO_LEVEL, MIN_RATIO_COEFFS, MIN_RATIO_SIGNAL_LEN,
};
pub use stats::{excess_kurtosis, ml_sigma, LevelStats};
