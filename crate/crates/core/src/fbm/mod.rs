//! Fractional Brownian motion and the isotropic Lévy fractional Brownian
//! field.
//!
//! With `B(0) = 0`, the field covariance is
//! `E[B(x)B(y)] = σ²/2 (‖x‖^{2H} + ‖y‖^{2H} − ‖x − y‖^{2H})`
//! and increments have variance `σ² r^{2H}` (the structure function).

mod circulant;
mod estimate;
mod exact;

pub use circulant::{synth_fbm_spectral, CirculantFbm2d};
pub use estimate::{
    estimate_hurst, estimate_hurst_with, increment_variogram, isotropic_variogram, HurstEstimate,
    Increments, DEFAULT_MAX_LAG,
};
pub use exact::{synth_fbm_exact, ExactFbm1d, ExactFbm2d, MAX_EXACT_SIDE};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FbmParams {
    hurst: f64,
    sigma_h: f64,
    sigma_w: Option<f64>,
}

impl FbmParams {
    pub fn new(hurst: f64, sigma_h: f64) -> Result<Self> {
        check_hurst(hurst)?;
        if !(sigma_h > 0.0 && sigma_h.is_finite()) {
            return Err(Error::invalid(format!(
                "sigma_h must be positive, got {sigma_h}"
            )));
        }
        Ok(Self {
            hurst,
            sigma_h,
            sigma_w: None,
        })
    }

    /// Derives the amplitude from the driving variance:
    /// `σ_H² = σ_w² cos(πH) Γ(1−2H) / (2πH)`.
    pub fn from_sigma_w(hurst: f64, sigma_w: f64) -> Result<Self> {
        check_hurst(hurst)?;
        if !(sigma_w > 0.0 && sigma_w.is_finite()) {
            return Err(Error::invalid(format!(
                "sigma_w must be positive, got {sigma_w}"
            )));
        }
        Ok(Self {
            hurst,
            sigma_h: sigma_w * variance_ratio(hurst).sqrt(),
            sigma_w: Some(sigma_w),
        })
    }

    pub fn hurst(&self) -> f64 {
        self.hurst
    }

    pub fn sigma_h(&self) -> f64 {
        self.sigma_h
    }

    pub fn sigma_w(&self) -> Option<f64> {
        self.sigma_w
    }
}

fn check_hurst(h: f64) -> Result<()> {
    if h > 0.0 && h < 1.0 {
        Ok(())
    } else {
        Err(Error::invalid(format!(
            "Hurst exponent must lie in (0,1), got {h}"
        )))
    }
}

/// `σ_H² / σ_w² = cos(πH) Γ(1−2H) / (2πH)`.
///
/// `cos(πH)` and `Γ(1−2H)` both change sign at `H = 1/2`, where the gamma
/// function has a pole. Writing `ε = H − 1/2`, the product equals
/// `sin(πε) Γ(2−2H) / (2ε)`, so the ratio is
/// `sinc(πε) Γ(2−2H) / (4H)`: finite, smooth, and `1/2` at `H = 1/2`.
pub fn variance_ratio(hurst: f64) -> f64 {
    let eps = hurst - 0.5;
    let x = std::f64::consts::PI * eps;
    let sinc = if x.abs() < 1e-4 {
        1.0 - x * x / 6.0
    } else {
        x.sin() / x
    };
    sinc * statrs::function::gamma::gamma(2.0 - 2.0 * hurst) / (4.0 * hurst)
}

/// `E[B(x) B(y)]` for the isotropic field.
pub fn fbm_covariance_2d(params: &FbmParams, x: [f64; 2], y: [f64; 2]) -> f64 {
    let two_h = 2.0 * params.hurst;
    let p = |v: [f64; 2]| v[0].hypot(v[1]).powf(two_h);
    0.5 * params.sigma_h * params.sigma_h * (p(x) + p(y) - p([x[0] - y[0], x[1] - y[1]]))
}

/// Increment variance at lag `(d1, d2)`: `σ_H² r^{2H}`.
pub fn structure_function(params: &FbmParams, d1: f64, d2: f64) -> Result<f64> {
    let r = d1.hypot(d2);
    if r == 0.0 {
        return Err(Error::invalid(
            "structure function is undefined at zero lag",
        ));
    }
    Ok(params.sigma_h * params.sigma_h * r.powf(2.0 * params.hurst))
}

/// Covariance of unit-spaced fractional Gaussian noise at integer lag `k`.
pub(crate) fn fgn_autocovariance(hurst: f64, k: usize) -> f64 {
    let two_h = 2.0 * hurst;
    let k = k as f64;
    0.5 * ((k + 1.0).powf(two_h) - 2.0 * k.powf(two_h) + (k - 1.0).abs().powf(two_h))
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn covariance_examples() {
        let p = FbmParams::new(0.5, 1.0).unwrap();
        assert_eq!(fbm_covariance_2d(&p, [0.0, 0.0], [0.0, 0.0]), 0.0);
        let v = fbm_covariance_2d(&p, [1.0, 0.0], [0.0, 1.0]);
        assert!((v - 0.5 * (2.0 - 2f64.sqrt())).abs() < 1e-15);
        assert!((v - 0.292_893_218_813_452_5).abs() < 1e-12);
        let q = FbmParams::new(0.3, 1.7).unwrap();
        let x = [2.0, -3.0];
        let expect = 1.7f64.powi(2) * 13f64.powf(0.3);
        assert!((fbm_covariance_2d(&q, x, x) - expect).abs() < 1e-12);
    }

    #[test]
    fn structure_function_examples() {
        for h in [0.1, 0.5, 0.9] {
            let p = FbmParams::new(h, 2.0).unwrap();
            assert!((structure_function(&p, 1.0, 0.0).unwrap() - 4.0).abs() < 1e-12);
            assert!((structure_function(&p, 0.6, 0.8).unwrap() - 4.0).abs() < 1e-12);
        }
        let p = FbmParams::new(0.5, 1.0).unwrap();
        let r1 = structure_function(&p, 1.0, 0.0).unwrap();
        let r2 = structure_function(&p, 0.0, 2.0).unwrap();
        assert_eq!(r2, 2.0 * r1);
        assert!(structure_function(&p, 0.0, 0.0).is_err());
    }

    #[test]
    fn hurst_bounds_are_enforced() {
        assert!(FbmParams::new(0.0, 1.0).is_err());
        assert!(FbmParams::new(1.0, 1.0).is_err());
        assert!(FbmParams::new(0.5, 0.0).is_err());
        assert!(FbmParams::from_sigma_w(0.5, -1.0).is_err());
    }

    #[test]
    fn variance_ratio_matches_defining_formula_off_center() {
        use statrs::function::gamma::gamma;
        use std::f64::consts::PI;
        for h in [0.05, 0.2, 0.35, 0.49, 0.51, 0.7, 0.95] {
            let direct = (PI * h).cos() * gamma(1.0 - 2.0 * h) / (2.0 * PI * h);
            let r = variance_ratio(h);
            assert!(
                ((r - direct) / direct).abs() < 1e-9,
                "H={h}: {r} vs {direct}"
            );
        }
    }

    #[test]
    fn variance_ratio_is_continuous_at_one_half() {
        use statrs::function::gamma::gamma;
        use std::f64::consts::PI;
        let direct = |h: f64| (PI * h).cos() * gamma(1.0 - 2.0 * h) / (2.0 * PI * h);
        let below = direct(0.5 - 1e-6);
        let above = direct(0.5 + 1e-6);
        let mid = variance_ratio(0.5);
        assert!((mid - 0.5).abs() < 1e-15);
        assert!((below - mid).abs() < 1e-5 && (above - mid).abs() < 1e-5);
        let p = FbmParams::from_sigma_w(0.5, 2.0).unwrap();
        assert!((p.sigma_h().powi(2) - 2.0).abs() < 1e-12);
    }

    #[test]
    fn sigma_relation_holds() {
        use statrs::function::gamma::gamma;
        use std::f64::consts::PI;
        let p = FbmParams::from_sigma_w(0.8, 1.3).unwrap();
        let expect = 1.3f64.powi(2) * (PI * 0.8).cos() * gamma(1.0 - 1.6) / (2.0 * PI * 0.8);
        assert!(((p.sigma_h().powi(2) - expect) / expect).abs() < 1e-9);
    }

    proptest! {
        #[test]
        fn covariance_is_symmetric(h in 0.01f64..0.99, ax in -50.0f64..50.0, ay in -50.0f64..50.0,
                                   bx in -50.0f64..50.0, by in -50.0f64..50.0) {
            let p = FbmParams::new(h, 1.3).unwrap();
            let c1 = fbm_covariance_2d(&p, [ax, ay], [bx, by]);
            let c2 = fbm_covariance_2d(&p, [bx, by], [ax, ay]);
            prop_assert!((c1 - c2).abs() <= 1e-12 * (1.0 + c1.abs()));
        }

        #[test]
        fn structure_function_is_isotropic(h in 0.01f64..0.99, r in 0.1f64..40.0, theta in 0.0f64..std::f64::consts::TAU) {
            let p = FbmParams::new(h, 0.7).unwrap();
            let a = structure_function(&p, r, 0.0).unwrap();
            let b = structure_function(&p, r * theta.cos(), r * theta.sin()).unwrap();
            prop_assert!((a - b).abs() <= 1e-12 * a);
        }
    }

    #[test]
    fn covariance_is_psd_on_random_point_sets() {
        use rand::Rng;
        let mut rng = crate::seed::rng(11);
        for trial in 0..20 {
            let h = 0.05 + 0.9 * (trial as f64) / 19.0;
            let p = FbmParams::new(h, 1.0).unwrap();
            let pts: Vec<[f64; 2]> = (0..30)
                .map(|_| [rng.random_range(-10.0..10.0), rng.random_range(-10.0..10.0)])
                .collect();
            let m =
                nalgebra::DMatrix::from_fn(30, 30, |i, j| fbm_covariance_2d(&p, pts[i], pts[j]));
            let trace = m.trace();
            let eig = nalgebra::SymmetricEigen::new(m);
            let min = eig.eigenvalues.min();
            assert!(min >= -1e-8 * trace, "H={h}: min eigenvalue {min}");
        }
    }
}
