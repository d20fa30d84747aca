//! Run configuration from plain `key = value` files.
//!
//! ```text
//! # comment
//! seed = 7
//! rtv.lambda = 0.02
//! svm.gamma = auto
//! ```
//!
//! Keys are `section.name`; every key has a default and unknown or repeated
//! keys are rejected.

use std::fmt::Write as _;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::classify::{DistanceKind, KernelChoice, TwoViewConfig};
use crate::error::{Error, Result};
use crate::features::{Connectivity, FeatureConfig, Gamma, StructuralMode};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum FbmMethod {
    Exact,
    Spectral,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FbmSettings {
    pub hurst: f64,
    pub sigma: f64,
    pub size: usize,
    pub method: FbmMethod,
    pub max_lag: usize,
}

impl Default for FbmSettings {
    fn default() -> Self {
        Self {
            hurst: 0.5,
            sigma: 1.0,
            size: 64,
            method: FbmMethod::Exact,
            max_lag: crate::fbm::DEFAULT_MAX_LAG,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunConfig {
    pub seed: u64,
    pub out_dir: PathBuf,
    pub fbm: FbmSettings,
    pub features: FeatureConfig,
    pub two_view: TwoViewConfig,
}

impl Default for RunConfig {
    fn default() -> Self {
        Self {
            seed: 0,
            out_dir: PathBuf::from("out"),
            fbm: FbmSettings::default(),
            features: FeatureConfig::default(),
            two_view: TwoViewConfig::default(),
        }
    }
}

fn num<T: FromStr>(key: &str, value: &str) -> Result<T> {
    value
        .parse()
        .map_err(|_| Error::invalid(format!("invalid value {value:?} for {key}")))
}

fn auto_or<T: FromStr>(key: &str, value: &str) -> Result<Option<T>> {
    if value == "auto" {
        Ok(None)
    } else {
        num(key, value).map(Some)
    }
}

impl RunConfig {
    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::parse(&text)
    }

    pub fn parse(text: &str) -> Result<Self> {
        let mut cfg = Self::default();
        let mut seen = std::collections::HashSet::new();
        for (lineno, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let (key, value) = line.split_once('=').ok_or_else(|| {
                Error::format(
                    "config",
                    format!("line {}: expected key = value", lineno + 1),
                )
            })?;
            let (key, value) = (key.trim(), value.trim());
            if !seen.insert(key.to_string()) {
                return Err(Error::invalid(format!(
                    "line {}: duplicate key {key}",
                    lineno + 1
                )));
            }
            cfg.set(key, value).map_err(|e| match e {
                Error::InvalidInput(m) => Error::invalid(format!("line {}: {m}", lineno + 1)),
                other => other,
            })?;
        }
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn set(&mut self, key: &str, value: &str) -> Result<()> {
        let f = &mut self.features;
        let tv = &mut self.two_view;
        match key {
            "seed" => self.seed = num(key, value)?,
            "out_dir" => self.out_dir = PathBuf::from(value),
            "fbm.hurst" => self.fbm.hurst = num(key, value)?,
            "fbm.sigma" => self.fbm.sigma = num(key, value)?,
            "fbm.size" => self.fbm.size = num(key, value)?,
            "fbm.max_lag" => self.fbm.max_lag = num(key, value)?,
            "fbm.method" => {
                self.fbm.method = match value {
                    "exact" => FbmMethod::Exact,
                    "spectral" => FbmMethod::Spectral,
                    _ => {
                        return Err(Error::invalid(format!(
                            "fbm.method must be exact or spectral, got {value:?}"
                        )))
                    }
                }
            }
            "rtv.lambda" => f.rtv.lambda = num(key, value)?,
            "rtv.sigma_s" => f.rtv.sigma_s = num(key, value)?,
            "rtv.eps" => f.rtv.eps = num(key, value)?,
            "rtv.eps_s" => f.rtv.eps_s = num(key, value)?,
            "rtv.iterations" => f.rtv.iterations = num(key, value)?,
            "features.patch_size" => f.patch_size = num(key, value)?,
            "features.structural_mode" => {
                f.structural = match value {
                    "pc" => StructuralMode::Pc,
                    "sth" => StructuralMode::Sth,
                    _ => {
                        return Err(Error::invalid(format!(
                            "features.structural_mode must be pc or sth, got {value:?}"
                        )))
                    }
                }
            }
            "pc.scales" => f.pc.scales = num(key, value)?,
            "pc.orientations" => f.pc.orientations = num(key, value)?,
            "pc.noise_k" => {
                f.pc.gamma = Gamma::Auto {
                    k: num(key, value)?,
                }
            }
            "pc.noise_threshold" => f.pc.gamma = Gamma::Fixed(num(key, value)?),
            "pc.eps" => f.pc.eps = num(key, value)?,
            "pc.min_wavelength" => f.pc.min_wavelength = num(key, value)?,
            "pc.mult" => f.pc.mult = num(key, value)?,
            "pc.sigma_on_f" => f.pc.sigma_on_f = num(key, value)?,
            "pc.d_theta_on_sigma" => f.pc.d_theta_on_sigma = num(key, value)?,
            "pc.cut_off" => f.pc.cut_off = num(key, value)?,
            "pc.gain" => f.pc.gain = num(key, value)?,
            "sth.quant_levels" => f.sth.quant_levels = num(key, value)?,
            "sth.dark_threshold" => f.sth.dark_threshold = num(key, value)?,
            "sth.connectivity" => {
                f.sth.connectivity = match value {
                    "4" => Connectivity::Four,
                    "8" => Connectivity::Eight,
                    _ => {
                        return Err(Error::invalid(format!(
                            "sth.connectivity must be 4 or 8, got {value:?}"
                        )))
                    }
                }
            }
            "svm.c" => tv.svm.c = num(key, value)?,
            "svm.tol" => tv.svm.tol = num(key, value)?,
            "svm.max_iter" => tv.svm.max_iter = num(key, value)?,
            "svm.kernel" => {
                tv.svm.kernel = match (value, &tv.svm.kernel) {
                    ("linear", _) => KernelChoice::Linear,
                    ("rbf", KernelChoice::Rbf { gamma }) => KernelChoice::Rbf { gamma: *gamma },
                    ("rbf", KernelChoice::Linear) => KernelChoice::Rbf { gamma: None },
                    _ => {
                        return Err(Error::invalid(format!(
                            "svm.kernel must be linear or rbf, got {value:?}"
                        )))
                    }
                }
            }
            "svm.gamma" => {
                let gamma = auto_or(key, value)?;
                match &mut tv.svm.kernel {
                    KernelChoice::Rbf { gamma: g } => *g = gamma,
                    KernelChoice::Linear => {
                        return Err(Error::invalid(
                            "svm.gamma needs the rbf kernel (set svm.kernel first)",
                        ))
                    }
                }
            }
            "svm.distance" => {
                tv.distance = match value {
                    "functional" => DistanceKind::Functional,
                    "geometric" => DistanceKind::Geometric,
                    _ => {
                        return Err(Error::invalid(format!(
                            "svm.distance must be functional or geometric, got {value:?}"
                        )))
                    }
                }
            }
            "nn.epochs" => tv.fusion.epochs = num(key, value)?,
            "nn.lr" => tv.fusion.lr = num(key, value)?,
            "nn.restarts" => tv.fusion.restarts = num(key, value)?,
            "split.test_count" => tv.test_count = auto_or(key, value)?,
            _ => return Err(Error::invalid(format!("unknown config key {key:?}"))),
        }
        Ok(())
    }

    pub fn validate(&self) -> Result<()> {
        self.features.rtv.validate()?;
        self.features.pc.validate()?;
        self.features.sth.validate()?;
        self.two_view.svm.validate()?;
        let fb = &self.fbm;
        if !(fb.hurst > 0.0 && fb.hurst < 1.0 && fb.sigma > 0.0 && fb.size >= 2 && fb.max_lag >= 1)
        {
            return Err(Error::invalid(format!("invalid fbm settings {fb:?}")));
        }
        if self.features.patch_size == 0 {
            return Err(Error::invalid("features.patch_size must be positive"));
        }
        let nn = &self.two_view.fusion;
        if !(nn.lr > 0.0 && nn.lr.is_finite()) || nn.restarts == 0 {
            return Err(Error::invalid(
                "nn.lr must be positive and nn.restarts at least 1",
            ));
        }
        Ok(())
    }

    /// Every key with its effective value, in a form [`RunConfig::parse`] accepts.
    pub fn render(&self) -> String {
        let f = &self.features;
        let tv = &self.two_view;
        let mut s = String::new();
        let mut kv = |k: &str, v: String| {
            let _ = writeln!(s, "{k} = {v}");
        };
        kv("seed", self.seed.to_string());
        kv("out_dir", self.out_dir.display().to_string());
        kv("fbm.hurst", self.fbm.hurst.to_string());
        kv("fbm.sigma", self.fbm.sigma.to_string());
        kv("fbm.size", self.fbm.size.to_string());
        kv(
            "fbm.method",
            match self.fbm.method {
                FbmMethod::Exact => "exact".into(),
                FbmMethod::Spectral => "spectral".into(),
            },
        );
        kv("fbm.max_lag", self.fbm.max_lag.to_string());
        kv("rtv.lambda", f.rtv.lambda.to_string());
        kv("rtv.sigma_s", f.rtv.sigma_s.to_string());
        kv("rtv.eps", f.rtv.eps.to_string());
        kv("rtv.eps_s", f.rtv.eps_s.to_string());
        kv("rtv.iterations", f.rtv.iterations.to_string());
        kv("features.patch_size", f.patch_size.to_string());
        kv(
            "features.structural_mode",
            match f.structural {
                StructuralMode::Pc => "pc".into(),
                StructuralMode::Sth => "sth".into(),
            },
        );
        kv("pc.scales", f.pc.scales.to_string());
        kv("pc.orientations", f.pc.orientations.to_string());
        match f.pc.gamma {
            Gamma::Auto { k } => kv("pc.noise_k", k.to_string()),
            Gamma::Fixed(t) => kv("pc.noise_threshold", t.to_string()),
        }
        kv("pc.eps", f.pc.eps.to_string());
        kv("pc.min_wavelength", f.pc.min_wavelength.to_string());
        kv("pc.mult", f.pc.mult.to_string());
        kv("pc.sigma_on_f", f.pc.sigma_on_f.to_string());
        kv("pc.d_theta_on_sigma", f.pc.d_theta_on_sigma.to_string());
        kv("pc.cut_off", f.pc.cut_off.to_string());
        kv("pc.gain", f.pc.gain.to_string());
        kv("sth.quant_levels", f.sth.quant_levels.to_string());
        kv("sth.dark_threshold", f.sth.dark_threshold.to_string());
        kv(
            "sth.connectivity",
            match f.sth.connectivity {
                Connectivity::Four => "4".into(),
                Connectivity::Eight => "8".into(),
            },
        );
        kv("svm.c", tv.svm.c.to_string());
        match tv.svm.kernel {
            KernelChoice::Linear => kv("svm.kernel", "linear".into()),
            KernelChoice::Rbf { gamma } => {
                kv("svm.kernel", "rbf".into());
                kv("svm.gamma", gamma.map_or("auto".into(), |g| g.to_string()));
            }
        }
        kv("svm.tol", tv.svm.tol.to_string());
        kv("svm.max_iter", tv.svm.max_iter.to_string());
        kv(
            "svm.distance",
            match tv.distance {
                DistanceKind::Functional => "functional".into(),
                DistanceKind::Geometric => "geometric".into(),
            },
        );
        kv("nn.epochs", tv.fusion.epochs.to_string());
        kv("nn.lr", tv.fusion.lr.to_string());
        kv("nn.restarts", tv.fusion.restarts.to_string());
        kv(
            "split.test_count",
            tv.test_count.map_or("auto".into(), |n| n.to_string()),
        );
        s
    }
}
