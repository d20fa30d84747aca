//! Large-grid synthesis by 2D circulant embedding of a locally modified
//! stationary covariance (Stein's construction).
//!
//! For `α = 2H` the stationary covariance
//!
//! ```text
//! ρ(r) = c0 − r^α + c2 r²     r ≤ 1
//!      = β (R − r)³ / r       1 < r ≤ R
//!      = 0                    r > R
//! ```
//!
//! admits a nonnegative circulant embedding on `[0, R]²` (with `R = 1` for
//! `α ≤ 1.5`, `R = 2` otherwise). For `Z` with covariance `ρ` and an
//! independent standard normal pair `X`,
//! `Z(t) − Z(0) + √(2 c2) ⟨t, X⟩` has increment variance `2|s − t|^α`
//! whenever `|s − t| ≤ 1`. The output grid is placed so that its diagonal has
//! length at most 1, which makes the result exact on the whole grid.

use rand_distr::{Distribution, StandardNormal};
use rustfft::num_complex::Complex64;
use rustfft::FftDirection;

use super::FbmParams;
use crate::error::{Error, Result};
use crate::fft::fft2;
use crate::field::GrayField;
use crate::seed;

#[derive(Debug, Clone, Copy)]
struct Embedding {
    alpha: f64,
    big_r: f64,
    beta: f64,
    c0: f64,
    c2: f64,
}

impl Embedding {
    fn new(hurst: f64) -> Self {
        let alpha = 2.0 * hurst;
        if alpha <= 1.5 {
            Self {
                alpha,
                big_r: 1.0,
                beta: 0.0,
                c0: 1.0 - alpha / 2.0,
                c2: alpha / 2.0,
            }
        } else {
            let big_r: f64 = 2.0;
            let beta = alpha * (2.0 - alpha) / (3.0 * big_r * (big_r * big_r - 1.0));
            let c2 = (alpha - beta * (big_r - 1.0).powi(2) * (big_r + 2.0)) / 2.0;
            let c0 = beta * (big_r - 1.0).powi(3) + 1.0 - c2;
            Self {
                alpha,
                big_r,
                beta,
                c0,
                c2,
            }
        }
    }

    fn rho(&self, r: f64) -> f64 {
        if r <= 1.0 {
            self.c0 - r.powf(self.alpha) + self.c2 * r * r
        } else if r <= self.big_r {
            self.beta * (self.big_r - r).powi(3) / r
        } else {
            0.0
        }
    }
}

/// Reusable sampler: the embedding spectrum is computed once per `(H, n)`.
#[derive(Debug, Clone)]
pub struct CirculantFbm2d {
    params: FbmParams,
    n: usize,
    /// samples per unit length
    per_unit: usize,
    /// embedding period (pixels per side)
    period: usize,
    sqrt_eig: Vec<f64>,
    emb: Embedding,
}

impl CirculantFbm2d {
    pub fn new(params: FbmParams, n: usize) -> Result<Self> {
        if n < 2 || !n.is_power_of_two() {
            return Err(Error::invalid(format!(
                "spectral synthesis needs a power-of-two side >= 2, got {n}"
            )));
        }
        let emb = Embedding::new(params.hurst());
        let per_unit = ((n - 1) as f64 * std::f64::consts::SQRT_2).ceil() as usize;
        let half = per_unit * emb.big_r as usize;
        let period = 2 * half;
        let h = 1.0 / per_unit as f64;

        let mut buf = vec![Complex64::new(0.0, 0.0); period * period];
        for i in 0..period {
            let di = i.min(period - i) as f64;
            for j in 0..period {
                let dj = j.min(period - j) as f64;
                buf[i * period + j] = Complex64::new(emb.rho(h * di.hypot(dj)), 0.0);
            }
        }
        fft2(&mut buf, period, period, FftDirection::Forward);
        let max = buf.iter().map(|c| c.re).fold(0.0f64, f64::max);
        let scale = (period * period) as f64;
        let mut sqrt_eig = Vec::with_capacity(buf.len());
        for c in &buf {
            let lam = c.re;
            if lam < -1e-9 * max {
                return Err(Error::numerical(format!(
                    "circulant embedding has a negative eigenvalue {lam:e}"
                )));
            }
            sqrt_eig.push((lam.max(0.0) / scale).sqrt());
        }
        Ok(Self {
            params,
            n,
            per_unit,
            period,
            sqrt_eig,
            emb,
        })
    }

    pub fn sample(&self, seed: u64) -> GrayField {
        let mut rng = seed::rng(seed);
        let p = self.period;
        let mut buf: Vec<Complex64> = self
            .sqrt_eig
            .iter()
            .map(|&s| {
                let re: f64 = StandardNormal.sample(&mut rng);
                let im: f64 = StandardNormal.sample(&mut rng);
                Complex64::new(s * re, s * im)
            })
            .collect();
        let x1: f64 = StandardNormal.sample(&mut rng);
        let x2: f64 = StandardNormal.sample(&mut rng);
        fft2(&mut buf, p, p, FftDirection::Forward);

        let h = 1.0 / self.per_unit as f64;
        let origin = buf[0].re;
        let drift = (2.0 * self.emb.c2).sqrt();
        // Increment variance is 2 (r h)^{2H}; rescale to σ² r^{2H} in pixels.
        let scale = self.params.sigma_h() / (2f64.sqrt() * h.powf(self.params.hurst()));
        let n = self.n;
        GrayField::from_fn(n, n, |x, y| {
            let z = buf[y * p + x].re - origin;
            let lin = drift * h * (x as f64 * x1 + y as f64 * x2);
            scale * (z + lin)
        })
    }
}

/// Approximation-free large-grid synthesis for power-of-two sides.
pub fn synth_fbm_spectral(params: &FbmParams, n: usize, seed: u64) -> Result<GrayField> {
    Ok(CirculantFbm2d::new(*params, n)?.sample(seed))
}
