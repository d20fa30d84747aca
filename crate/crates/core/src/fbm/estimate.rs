//! Hurst estimation from the empirical structure function.
//!
//! For each integer lag `r` the mean squared increment is computed along rows
//! and along columns and the two are averaged. `log v(r) = 2H log r + log C`
//! is then fitted by ordinary least squares.
//!
//! Both first-order increments `B(x+r) - B(x)` and second-order increments
//! `B(x+2r) - 2B(x+r) + B(x)` obey this power law; the latter have
//! short-range correlations for every H and give a much tighter estimate on
//! small fields when H is large, so they are the default.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::field::GrayField;

/// Default largest lag, suited to 32x32 patches.
pub const DEFAULT_MAX_LAG: usize = 8;

const H_MIN: f64 = 0.01;
const H_MAX: f64 = 0.99;

/// Order of the increments entering the variogram.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Increments {
    First,
    #[default]
    Second,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HurstEstimate {
    pub h_hat: f64,
    /// Raw fitted log-log slope. Equals `2 * h_hat` unless `clamped`.
    pub slope: f64,
    pub intercept: f64,
    pub r_squared: f64,
    pub lags_used: Vec<f64>,
    /// Set when `slope / 2` fell outside `(0.01, 0.99)` and `h_hat` was clamped.
    pub clamped: bool,
    /// `v(r)` at each lag in `lags_used`.
    pub variogram: Vec<f64>,
    pub increments: Increments,
}

/// Axis-averaged mean squared first-order increment for lags `1..=max_lag`.
pub fn isotropic_variogram(field: &GrayField, max_lag: usize) -> Vec<f64> {
    increment_variogram(field, max_lag, Increments::First)
}

/// Axis-averaged mean squared increment of the given order for lags `1..=max_lag`.
pub fn increment_variogram(field: &GrayField, max_lag: usize, increments: Increments) -> Vec<f64> {
    let (w, h) = (field.width(), field.height());
    let order = match increments {
        Increments::First => 1,
        Increments::Second => 2,
    };
    let diff = |a: f64, b: f64, c: f64| match increments {
        Increments::First => b - a,
        Increments::Second => c - 2.0 * b + a,
    };
    let data = field.data();
    (1..=max_lag)
        .map(|lag| {
            let mut horiz = 0.0;
            let mut nh = 0usize;
            let span = order * lag;
            if span < w {
                for y in 0..h {
                    let row = &data[y * w..(y + 1) * w];
                    for x in 0..w - span {
                        let d = diff(row[x], row[x + lag], row[(x + 2 * lag).min(w - 1)]);
                        horiz += d * d;
                    }
                    nh += w - span;
                }
            }
            let mut vert = 0.0;
            let mut nv = 0usize;
            if span < h {
                for y in 0..h - span {
                    let a = &data[y * w..(y + 1) * w];
                    let b = &data[(y + lag) * w..(y + lag + 1) * w];
                    let y2 = (y + 2 * lag).min(h - 1);
                    let c = &data[y2 * w..(y2 + 1) * w];
                    for x in 0..w {
                        let d = diff(a[x], b[x], c[x]);
                        vert += d * d;
                    }
                    nv += w;
                }
            }
            match (nh, nv) {
                (0, 0) => 0.0,
                (0, _) => vert / nv as f64,
                (_, 0) => horiz / nh as f64,
                _ => 0.5 * (horiz / nh as f64 + vert / nv as f64),
            }
        })
        .collect()
}

/// Estimate with the default (second-order) increments.
pub fn estimate_hurst(field: &GrayField, max_lag: usize) -> Result<HurstEstimate> {
    estimate_hurst_with(field, max_lag, Increments::default())
}

pub fn estimate_hurst_with(
    field: &GrayField,
    max_lag: usize,
    increments: Increments,
) -> Result<HurstEstimate> {
    let side = field.width().min(field.height());
    if side < 8 {
        return Err(Error::invalid(format!(
            "Hurst estimation needs at least an 8x8 field, got {}x{}",
            field.width(),
            field.height()
        )));
    }
    if max_lag == 0 || max_lag > side / 4 {
        return Err(Error::invalid(format!(
            "max_lag must lie in 1..={} for this field, got {max_lag}",
            side / 4
        )));
    }
    let v = increment_variogram(field, max_lag, increments);
    // Relative floor so that rounding residue on a flat field is not fitted.
    let scale = field
        .data()
        .iter()
        .fold(0.0f64, |m, x| m.max(x.abs()))
        .max(1.0);
    let floor = (1e-14 * scale).powi(2);
    if v.iter().all(|&x| x <= floor) {
        return Err(Error::degenerate(
            "constant field: zero increment variance at every lag",
        ));
    }
    let pts: Vec<(f64, f64)> = v
        .iter()
        .enumerate()
        .filter(|(_, &x)| x > floor)
        .map(|(i, &x)| ((i + 1) as f64, x))
        .collect();
    if pts.len() < 3 {
        return Err(Error::degenerate(format!(
            "only {} lag(s) with nonzero increment variance; at least 3 required",
            pts.len()
        )));
    }
    let xs: Vec<f64> = pts.iter().map(|p| p.0.ln()).collect();
    let ys: Vec<f64> = pts.iter().map(|p| p.1.ln()).collect();
    let (slope, intercept, r_squared) = ols(&xs, &ys);
    let raw = slope / 2.0;
    let clamped = !(raw > H_MIN && raw < H_MAX);
    Ok(HurstEstimate {
        h_hat: raw.clamp(H_MIN, H_MAX),
        slope,
        intercept,
        r_squared,
        lags_used: pts.iter().map(|p| p.0).collect(),
        clamped,
        variogram: pts.iter().map(|p| p.1).collect(),
        increments,
    })
}

/// Ordinary least squares `y = a x + b`; returns `(a, b, R²)`.
pub(crate) fn ols(xs: &[f64], ys: &[f64]) -> (f64, f64, f64) {
    let n = xs.len() as f64;
    let mx = xs.iter().sum::<f64>() / n;
    let my = ys.iter().sum::<f64>() / n;
    let sxx: f64 = xs.iter().map(|x| (x - mx) * (x - mx)).sum();
    let sxy: f64 = xs.iter().zip(ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    let syy: f64 = ys.iter().map(|y| (y - my) * (y - my)).sum();
    let slope = sxy / sxx;
    let intercept = my - slope * mx;
    let r2 = if syy > 0.0 {
        (sxy * sxy / (sxx * syy)).clamp(0.0, 1.0)
    } else {
        1.0
    };
    (slope, intercept, r2)
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand_distr::{Distribution, StandardNormal};

    #[test]
    fn constant_field_is_rejected() {
        let f = GrayField::constant(32, 32, 0.4);
        assert!(matches!(estimate_hurst(&f, 8), Err(Error::Degenerate(_))));
    }

    #[test]
    fn size_and_lag_preconditions() {
        let f = GrayField::constant(7, 32, 0.0);
        assert!(estimate_hurst(&f, 1).is_err());
        let f = GrayField::from_fn(32, 32, |x, y| (x * y) as f64);
        assert!(estimate_hurst(&f, 9).is_err());
        assert!(estimate_hurst(&f, 0).is_err());
    }

    #[test]
    fn too_few_lags_is_rejected() {
        let f = GrayField::from_fn(16, 16, |x, y| (x + y) as f64);
        assert!(matches!(
            estimate_hurst_with(&f, 2, Increments::First),
            Err(Error::Degenerate(_))
        ));
    }

    #[test]
    fn ramp_has_no_second_order_increments() {
        let f = GrayField::from_fn(32, 32, |x, y| 0.1 * x as f64 + 0.2 * y as f64);
        assert!(matches!(estimate_hurst(&f, 8), Err(Error::Degenerate(_))));
    }

    #[test]
    fn quadratic_has_second_order_slope_four() {
        // second differences are 2 r^2 along each axis
        let f = GrayField::from_fn(32, 32, |x, y| (x * x + y * y) as f64);
        let est = estimate_hurst(&f, 8).unwrap();
        assert!((est.slope - 4.0).abs() < 1e-9);
        assert!(est.clamped);
    }

    #[test]
    fn linear_ramp_has_slope_two() {
        // v(r) = r^2 exactly, so the fit is perfect with H clamped at 0.99
        let f = GrayField::from_fn(32, 32, |x, y| 0.1 * x as f64 + 0.2 * y as f64);
        let est = estimate_hurst_with(&f, 8, Increments::First).unwrap();
        assert!((est.slope - 2.0).abs() < 1e-10);
        assert!(est.clamped);
        assert_eq!(est.h_hat, 0.99);
        assert!(est.r_squared > 1.0 - 1e-12);
    }

    #[test]
    fn random_walk_field_has_linear_variogram() {
        // B(x, y) = W1(x) + W2(y) with independent Gaussian random walks:
        // increment variance grows linearly in the lag, i.e. H = 1/2.
        let n = 512;
        let mut rng = crate::seed::rng(5);
        let mut walk = |len: usize| {
            let mut acc = 0.0;
            (0..len)
                .map(|_| {
                    let z: f64 = StandardNormal.sample(&mut rng);
                    acc += z;
                    acc
                })
                .collect::<Vec<f64>>()
        };
        let w1 = walk(n);
        let w2 = walk(n);
        let f = GrayField::from_fn(n, n, |x, y| w1[x] + w2[y]);
        for inc in [Increments::First, Increments::Second] {
            let est = estimate_hurst_with(&f, 8, inc).unwrap();
            assert!((est.h_hat - 0.5).abs() < 0.05, "{inc:?} {}", est.h_hat);
            assert!(est.r_squared > 0.99);
            assert_eq!(est.slope, 2.0 * est.h_hat);
        }
    }

    #[test]
    fn affine_intensity_changes_leave_estimate_unchanged() {
        let p = crate::fbm::FbmParams::new(0.35, 1.0).unwrap();
        let f = crate::fbm::synth_fbm_spectral(&p, 32, 4).unwrap();
        let base = estimate_hurst(&f, 8).unwrap();
        for (scale, offset) in [(3.5, 0.0), (0.01, 100.0), (250.0, -7.0)] {
            let g = f.map(|v| scale * v + offset).unwrap();
            let e = estimate_hurst(&g, 8).unwrap();
            assert!((e.h_hat - base.h_hat).abs() < 1e-10);
        }
    }
}
