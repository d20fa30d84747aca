//! Phase congruency from a log-Gabor quadrature filter bank.
//!
//! Per orientation `o` and scale `n` the complex filter response gives the
//! amplitude `A_n` and phase `φ_n`. With `φ̄` the amplitude-weighted mean
//! phase over scales,
//!
//! ```text
//! PC = Σ_o W_o Σ_n ⌊A_n (cos(φ_n − φ̄) − |sin(φ_n − φ̄)|) − γ⌋ / (Σ_o Σ_n A_n + ε)
//! ```
//!
//! `W_o` down-weights locations whose energy is concentrated in few scales.

use rustfft::num_complex::Complex64;
use rustfft::FftDirection;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::fft::fft2;
use crate::field::GrayField;

/// Noise threshold policy.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Gamma {
    /// Mean plus `k` standard deviations of the Rayleigh noise response,
    /// estimated per orientation from the median smallest-scale amplitude.
    Auto {
        k: f64,
    },
    Fixed(f64),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PcConfig {
    pub scales: usize,
    pub orientations: usize,
    pub gamma: Gamma,
    /// Relative to the image standard deviation.
    pub eps: f64,
    pub min_wavelength: f64,
    pub mult: f64,
    pub sigma_on_f: f64,
    pub d_theta_on_sigma: f64,
    /// Frequency-spread weighting: cut-off and gain of the sigmoid.
    pub cut_off: f64,
    pub gain: f64,
}

impl Default for PcConfig {
    fn default() -> Self {
        Self {
            scales: 4,
            orientations: 6,
            gamma: Gamma::Auto { k: 2.0 },
            eps: 1e-4,
            min_wavelength: 3.0,
            mult: 2.1,
            sigma_on_f: 0.55,
            d_theta_on_sigma: 1.2,
            cut_off: 0.5,
            gain: 10.0,
        }
    }
}

impl PcConfig {
    pub fn validate(&self) -> Result<()> {
        let gamma_ok = match self.gamma {
            Gamma::Auto { k } => k >= 0.0 && k.is_finite(),
            Gamma::Fixed(g) => g >= 0.0 && g.is_finite(),
        };
        let ok = self.scales >= 2
            && self.orientations >= 4
            && self.eps > 0.0
            && self.min_wavelength >= 2.0
            && self.mult > 1.0
            && self.sigma_on_f > 0.0
            && self.sigma_on_f < 1.0
            && self.d_theta_on_sigma > 0.0
            && gamma_ok;
        if ok {
            Ok(())
        } else {
            Err(Error::invalid(format!(
                "invalid phase congruency config: {self:?}"
            )))
        }
    }
}

/// Mirror-extends to `2w x 2h` so the periodic FFT sees no wrap-around edge.
fn mirror_spectrum(field: &GrayField) -> (Vec<Complex64>, usize, usize) {
    let (w, h) = (field.width(), field.height());
    let (pw, ph) = (2 * w, 2 * h);
    let mut buf = Vec::with_capacity(pw * ph);
    for y in 0..ph {
        let sy = if y < h { y } else { 2 * h - 1 - y };
        for x in 0..pw {
            let sx = if x < w { x } else { 2 * w - 1 - x };
            buf.push(Complex64::new(field.get(sx, sy), 0.0));
        }
    }
    fft2(&mut buf, ph, pw, FftDirection::Forward);
    (buf, pw, ph)
}

pub fn phase_congruency(structure: &GrayField, config: &PcConfig) -> Result<GrayField> {
    config.validate()?;
    let (w, h) = (structure.width(), structure.height());
    if w < 16 || h < 16 {
        return Err(Error::invalid(format!(
            "phase congruency needs at least 16x16, got {w}x{h}"
        )));
    }
    let sd = structure.variance().sqrt();
    let scale = structure
        .data()
        .iter()
        .fold(0.0f64, |m, v| m.max(v.abs()))
        .max(1e-300);
    if sd <= 1e-12 * scale {
        return Ok(GrayField::constant(w, h, 0.0));
    }
    let eps = config.eps * sd;
    let (spectrum, pw, ph) = mirror_spectrum(structure);

    // radius and angle of every frequency sample
    let freq = |i: usize, n: usize| {
        let k = if i < n / 2 {
            i as f64
        } else {
            i as f64 - n as f64
        };
        k / n as f64
    };
    let mut radius = vec![0.0; pw * ph];
    let mut theta = vec![0.0; pw * ph];
    for y in 0..ph {
        let v = freq(y, ph);
        for x in 0..pw {
            let u = freq(x, pw);
            radius[y * pw + x] = u.hypot(v);
            // image y grows downwards
            theta[y * pw + x] = (-v).atan2(u);
        }
    }
    let lowpass: Vec<f64> = radius
        .iter()
        .map(|r| 1.0 / (1.0 + (r / 0.45).powi(30)))
        .collect();
    let log_gabor: Vec<Vec<f64>> = (0..config.scales)
        .map(|s| {
            let f0 = 1.0 / (config.min_wavelength * config.mult.powi(s as i32));
            let denom = 2.0 * config.sigma_on_f.ln().powi(2);
            radius
                .iter()
                .zip(&lowpass)
                .map(|(&r, lp)| {
                    if r == 0.0 {
                        0.0
                    } else {
                        lp * (-(r / f0).ln().powi(2) / denom).exp()
                    }
                })
                .collect()
        })
        .collect();
    let theta_sigma = std::f64::consts::PI / config.orientations as f64 / config.d_theta_on_sigma;

    let n = w * h;
    let mut energy_total = vec![0.0; n];
    let mut amp_total = vec![0.0; n];
    let mut resp = vec![Complex64::new(0.0, 0.0); pw * ph];
    for o in 0..config.orientations {
        let angle = o as f64 * std::f64::consts::PI / config.orientations as f64;
        let (sa, ca) = angle.sin_cos();
        let spread: Vec<f64> = theta
            .iter()
            .map(|t| {
                let (st, ct) = t.sin_cos();
                let d = (st * ca - ct * sa).atan2(ct * ca + st * sa).abs();
                (-(d * d) / (2.0 * theta_sigma * theta_sigma)).exp()
            })
            .collect();
        let mut even = vec![vec![0.0; n]; config.scales];
        let mut odd = vec![vec![0.0; n]; config.scales];
        for s in 0..config.scales {
            for i in 0..pw * ph {
                resp[i] = spectrum[i] * (log_gabor[s][i] * spread[i]);
            }
            fft2(&mut resp, ph, pw, FftDirection::Inverse);
            let norm = 1.0 / (pw * ph) as f64;
            for y in 0..h {
                for x in 0..w {
                    let c = resp[y * pw + x] * norm;
                    even[s][y * w + x] = c.re;
                    odd[s][y * w + x] = c.im;
                }
            }
        }
        let amp: Vec<Vec<f64>> = (0..config.scales)
            .map(|s| (0..n).map(|i| even[s][i].hypot(odd[s][i])).collect())
            .collect();
        let gamma = match config.gamma {
            Gamma::Fixed(g) => g * sd,
            Gamma::Auto { k } => {
                let mut a0 = amp[0].clone();
                a0.sort_by(f64::total_cmp);
                let median = a0[a0.len() / 2];
                let tau = median / 4f64.ln().sqrt();
                tau * ((std::f64::consts::PI / 2.0).sqrt()
                    + k * ((4.0 - std::f64::consts::PI) / 2.0).sqrt())
            }
        };
        for i in 0..n {
            let (mut se, mut so, mut sa_, mut amax) = (0.0, 0.0, 0.0, 0.0f64);
            for s in 0..config.scales {
                se += even[s][i];
                so += odd[s][i];
                sa_ += amp[s][i];
                amax = amax.max(amp[s][i]);
            }
            let xe = se.hypot(so) + eps;
            let (me, mo) = (se / xe, so / xe);
            let mut e = 0.0;
            for s in 0..config.scales {
                let (re, im) = (even[s][i], odd[s][i]);
                let term = re * me + im * mo - (re * mo - im * me).abs();
                e += (term - gamma).max(0.0);
            }
            let width = (sa_ / (amax + eps) - 1.0) / (config.scales as f64 - 1.0);
            let weight = 1.0 / (1.0 + ((config.cut_off - width) * config.gain).exp());
            energy_total[i] += weight * e;
            amp_total[i] += sa_;
        }
    }
    let pc: Vec<f64> = energy_total
        .iter()
        .zip(&amp_total)
        .map(|(e, a)| (e / (a + eps)).clamp(0.0, 1.0))
        .collect();
    GrayField::new(w, h, pc)
}

/// `[mean PC]`.
pub fn structural_feature_pc(structure: &GrayField, config: &PcConfig) -> Result<Vec<f64>> {
    Ok(vec![phase_congruency(structure, config)?.mean()])
}
