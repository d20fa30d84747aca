//! Stochastic-texture analysis and two-view classification.
//!
//! The crate covers the full pipeline from raw grayscale images to a fused
//! classifier:
//!
//! * [`field`] and [`manifest`]: grayscale fields, PGM/PNG I/O, patches, dataset listings.
//! * [`fbm`]: fractional Brownian fields (covariance, exact and circulant synthesis,
//!   variogram Hurst estimation).
//! * [`wavelet`]: Haar pyramids, level statistics and scale self-similarity checks.
//! * [`rtv`]: relative-total-variation structure/texture separation.
//! * [`features`]: textural (Hurst) and structural (phase congruency, dark-blob area) views.
//! * [`classify`]: one-vs-one SMO SVMs, the shallow fusion network, splits and metrics.
//! * [`cli`]: the `twoview` command-line front end.

pub mod classify;
pub mod cli;
pub mod config;
pub mod error;
pub mod fbm;
pub mod features;
pub(crate) mod fft;
pub mod field;
pub mod linalg;
pub mod manifest;
pub mod rtv;
pub mod seed;
pub mod wavelet;

pub use error::{Error, Result};
pub use field::GrayField;
