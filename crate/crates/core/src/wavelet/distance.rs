//! Divergences and distances between zero-mean Gaussian densities.

use serde::{Deserialize, Serialize};
use statrs::function::erf::erf;

use crate::error::{Error, Result};

/// Grid size for the L2 and L∞ evaluations.
pub const GRID_POINTS: usize = (1 << 16) + 1;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum PdfMetric {
    /// Total-variation style `∫|p1 − p2|`.
    L1,
    L2,
    Linf,
}

fn check_sigmas(s1: f64, s2: f64) -> Result<()> {
    if s1 > 0.0 && s2 > 0.0 && s1.is_finite() && s2.is_finite() {
        Ok(())
    } else {
        Err(Error::invalid(format!(
            "standard deviations must be positive, got {s1}, {s2}"
        )))
    }
}

/// `D_KL(N(0, σ1²) ‖ N(0, σ2²)) = ln(σ2/σ1) + σ1²/(2σ2²) − 1/2`.
pub fn kl_gaussian_zero_mean(sigma1: f64, sigma2: f64) -> Result<f64> {
    check_sigmas(sigma1, sigma2)?;
    let r = sigma1 / sigma2;
    // ln(1/r) + r²/2 − 1/2 is ≥ 0 analytically; clip rounding residue.
    Ok((0.5 * (r * r - 1.0) - r.ln()).max(0.0))
}

fn gauss_pdf(x: f64, s: f64) -> f64 {
    (-0.5 * (x / s) * (x / s)).exp() / (s * (2.0 * std::f64::consts::PI).sqrt())
}

pub fn pdf_distance_zero_mean(sigma1: f64, sigma2: f64, metric: PdfMetric) -> Result<f64> {
    check_sigmas(sigma1, sigma2)?;
    if sigma1 == sigma2 {
        return Ok(0.0);
    }
    Ok(match metric {
        PdfMetric::L1 => l1_analytic(sigma1, sigma2),
        PdfMetric::L2 | PdfMetric::Linf => {
            let half = 8.0 * sigma1.max(sigma2);
            let step = 2.0 * half / (GRID_POINTS - 1) as f64;
            let mut sup = 0.0f64;
            let mut integral = 0.0;
            for i in 0..GRID_POINTS {
                let x = -half + i as f64 * step;
                let d = gauss_pdf(x, sigma1) - gauss_pdf(x, sigma2);
                sup = sup.max(d.abs());
                let w = if i == 0 || i == GRID_POINTS - 1 {
                    0.5
                } else {
                    1.0
                };
                integral += w * d * d;
            }
            match metric {
                PdfMetric::Linf => sup,
                _ => (integral * step).sqrt(),
            }
        }
    })
}

/// The narrower density dominates on `|x| < x*`, where the two cross, so
/// `∫|p1 − p2| = 2 (P_narrow(|X| < x*) − P_wide(|X| < x*))`.
fn l1_analytic(s1: f64, s2: f64) -> f64 {
    let (a, b) = if s1 < s2 { (s1, s2) } else { (s2, s1) };
    let x_star = (2.0 * a * a * b * b * (b / a).ln() / (b * b - a * a)).sqrt();
    let sqrt2 = std::f64::consts::SQRT_2;
    2.0 * (erf(x_star / (a * sqrt2)) - erf(x_star / (b * sqrt2)))
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    /// Adaptive Simpson quadrature, test-only oracle.
    fn adaptive_simpson(f: &dyn Fn(f64) -> f64, a: f64, b: f64, tol: f64) -> f64 {
        #[allow(clippy::too_many_arguments)]
        fn rec(
            f: &dyn Fn(f64) -> f64,
            a: f64,
            b: f64,
            fa: f64,
            fm: f64,
            fb: f64,
            whole: f64,
            tol: f64,
            depth: u32,
        ) -> f64 {
            let m = 0.5 * (a + b);
            let (lm, rm) = (0.5 * (a + m), 0.5 * (m + b));
            let (flm, frm) = (f(lm), f(rm));
            let left = (m - a) / 6.0 * (fa + 4.0 * flm + fm);
            let right = (b - m) / 6.0 * (fm + 4.0 * frm + fb);
            if depth == 0 || (left + right - whole).abs() <= 15.0 * tol {
                left + right + (left + right - whole) / 15.0
            } else {
                rec(f, a, m, fa, flm, fm, left, tol / 2.0, depth - 1)
                    + rec(f, m, b, fm, frm, fb, right, tol / 2.0, depth - 1)
            }
        }
        let m = 0.5 * (a + b);
        let (fa, fm, fb) = (f(a), f(m), f(b));
        rec(
            f,
            a,
            b,
            fa,
            fm,
            fb,
            (b - a) / 6.0 * (fa + 4.0 * fm + fb),
            tol,
            50,
        )
    }

    fn kl_quadrature(s1: f64, s2: f64) -> f64 {
        let f = |x: f64| {
            let p = gauss_pdf(x, s1);
            if p == 0.0 {
                0.0
            } else {
                // log ratio in closed form avoids underflow in the tails
                p * ((s2 / s1).ln() - 0.5 * x * x * (1.0 / (s1 * s1) - 1.0 / (s2 * s2)))
            }
        };
        let lim = 40.0 * s1;
        adaptive_simpson(&f, -lim, 0.0, 1e-11) + adaptive_simpson(&f, 0.0, lim, 1e-11)
    }

    #[test]
    fn kl_examples() {
        assert_eq!(kl_gaussian_zero_mean(1.3, 1.3).unwrap(), 0.0);
        let v = kl_gaussian_zero_mean(1.0, 2.0).unwrap();
        let expect = 2f64.ln() + 0.125 - 0.5;
        assert!((v - expect).abs() < 1e-15);
        assert!((v - 0.318_147).abs() < 1e-6);
        assert!((v - kl_quadrature(1.0, 2.0)).abs() < 1e-6);
        let seq: Vec<f64> = [10.0, 100.0, 1000.0]
            .iter()
            .map(|&s| kl_gaussian_zero_mean(1.0, s).unwrap())
            .collect();
        assert!(seq[0] < seq[1] && seq[1] < seq[2]);
        assert!(kl_gaussian_zero_mean(0.0, 1.0).is_err());
        assert!(kl_gaussian_zero_mean(1.0, -1.0).is_err());
    }

    #[test]
    fn l1_matches_fine_grid() {
        let (s1, s2) = (1.0, 2.0);
        let n = 400_001;
        let half = 20.0;
        let h = 2.0 * half / (n - 1) as f64;
        let grid: f64 = (0..n)
            .map(|i| {
                let x = -half + i as f64 * h;
                let w = if i == 0 || i == n - 1 { 0.5 } else { 1.0 };
                w * (gauss_pdf(x, s1) - gauss_pdf(x, s2)).abs()
            })
            .sum::<f64>()
            * h;
        let v = pdf_distance_zero_mean(s1, s2, PdfMetric::L1).unwrap();
        assert!((v - grid).abs() < 1e-4, "{v} vs {grid}");
    }

    #[test]
    fn linf_matches_golden_section_refinement() {
        let (s1, s2) = (1.0, 2.0);
        let g = |x: f64| (gauss_pdf(x, s1) - gauss_pdf(x, s2)).abs();
        // coarse argmax, then golden-section on the bracketing cells
        let coarse: Vec<f64> = (0..=2000).map(|i| -16.0 + i as f64 * 0.016).collect();
        let best = coarse
            .iter()
            .copied()
            .fold(coarse[0], |b, x| if g(x) > g(b) { x } else { b });
        let (mut a, mut b) = (best - 0.016, best + 0.016);
        let phi = (5f64.sqrt() - 1.0) / 2.0;
        for _ in 0..200 {
            let c = b - phi * (b - a);
            let d = a + phi * (b - a);
            if g(c) > g(d) {
                b = d;
            } else {
                a = c;
            }
        }
        let oracle = g(0.5 * (a + b));
        let v = pdf_distance_zero_mean(s1, s2, PdfMetric::Linf).unwrap();
        assert!((v - oracle).abs() < 1e-6, "{v} vs {oracle}");
    }

    #[test]
    fn equal_sigmas_give_zero() {
        for m in [PdfMetric::L1, PdfMetric::L2, PdfMetric::Linf] {
            assert_eq!(pdf_distance_zero_mean(0.7, 0.7, m).unwrap(), 0.0);
        }
        assert!(pdf_distance_zero_mean(0.0, 0.7, PdfMetric::L1).is_err());
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(64))]

        #[test]
        fn kl_closed_form_matches_quadrature(s1 in 0.1f64..10.0, s2 in 0.1f64..10.0) {
            let v = kl_gaussian_zero_mean(s1, s2).unwrap();
            prop_assert!((v - kl_quadrature(s1, s2)).abs() < 1e-6);
        }

        #[test]
        fn kl_is_positive_and_asymmetric(s1 in 0.1f64..10.0, s2 in 0.1f64..10.0) {
            prop_assume!((s1 - s2).abs() > 1e-3);
            let a = kl_gaussian_zero_mean(s1, s2).unwrap();
            let b = kl_gaussian_zero_mean(s2, s1).unwrap();
            prop_assert!(a > 0.0 && b > 0.0);
            prop_assert!((a - b).abs() > 1e-12);
        }

        #[test]
        fn distances_are_symmetric(s1 in 0.1f64..10.0, s2 in 0.1f64..10.0) {
            for m in [PdfMetric::L1, PdfMetric::L2, PdfMetric::Linf] {
                let a = pdf_distance_zero_mean(s1, s2, m).unwrap();
                let b = pdf_distance_zero_mean(s2, s1, m).unwrap();
                prop_assert!((a - b).abs() < 1e-9 && a >= 0.0);
            }
        }
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(24))]

        #[test]
        fn triangle_inequality(s1 in 0.2f64..5.0, s2 in 0.2f64..5.0, s3 in 0.2f64..5.0) {
            for m in [PdfMetric::L1, PdfMetric::L2, PdfMetric::Linf] {
                let d12 = pdf_distance_zero_mean(s1, s2, m).unwrap();
                let d23 = pdf_distance_zero_mean(s2, s3, m).unwrap();
                let d13 = pdf_distance_zero_mean(s1, s3, m).unwrap();
                prop_assert!(d13 <= d12 + d23 + 1e-6);
            }
        }
    }
}
