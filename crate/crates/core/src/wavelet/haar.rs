use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::field::GrayField;

/// Scaling convention of the Haar analysis.
///
/// `Analysis` averages: each step divides sums and differences by the number
/// of samples combined (2 in 1D, 4 in 2D), so coefficients at level `j`
/// behave like `2^j ∫ B(t) Ψ(2^j t − k) dt` and the detail variance of a
/// self-similar signal grows by `2^{2H}` per coarser level. `Orthonormal`
/// divides by `√2` (1D) or `2` (2D) and preserves energy.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Normalization {
    Analysis,
    Orthonormal,
}

impl Normalization {
    fn scale_1d(self) -> f64 {
        match self {
            Normalization::Analysis => 0.5,
            Normalization::Orthonormal => std::f64::consts::FRAC_1_SQRT_2,
        }
    }

    fn scale_2d(self) -> f64 {
        match self {
            Normalization::Analysis => 0.25,
            Normalization::Orthonormal => 0.5,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PyramidLevel {
    /// 1 is the finest level.
    pub level: usize,
    pub horizontal: GrayField,
    pub vertical: GrayField,
    pub diagonal: GrayField,
    pub approximation: GrayField,
}

impl PyramidLevel {
    /// All three detail orientations pooled into one sample.
    pub fn pooled_details(&self) -> Vec<f64> {
        let mut v = Vec::with_capacity(3 * self.horizontal.len());
        v.extend_from_slice(self.horizontal.data());
        v.extend_from_slice(self.vertical.data());
        v.extend_from_slice(self.diagonal.data());
        v
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WaveletPyramid {
    pub normalization: Normalization,
    pub levels: Vec<PyramidLevel>,
}

impl WaveletPyramid {
    pub fn level(&self, j: usize) -> &PyramidLevel {
        &self.levels[j - 1]
    }

    /// Sum of squares of every detail plane plus the coarsest approximation.
    pub fn energy(&self) -> f64 {
        let sq = |f: &GrayField| f.data().iter().map(|v| v * v).sum::<f64>();
        let details: f64 = self
            .levels
            .iter()
            .map(|l| sq(&l.horizontal) + sq(&l.vertical) + sq(&l.diagonal))
            .sum();
        details + self.levels.last().map_or(0.0, |l| sq(&l.approximation))
    }
}

/// Separable 2D Haar analysis, recursing on the approximation plane. An odd
/// trailing row or column is dropped at each level.
pub fn haar_pyramid(
    field: &GrayField,
    levels: usize,
    norm: Normalization,
) -> Result<WaveletPyramid> {
    if levels == 0 {
        return Err(Error::invalid("pyramid needs at least one level"));
    }
    let side = field.width().min(field.height());
    if levels >= usize::BITS as usize || side < (1usize << levels) {
        return Err(Error::invalid(format!(
            "{levels} Haar levels need min side >= {}, got {}x{}",
            1u64 << levels.min(63),
            field.width(),
            field.height()
        )));
    }
    let s = norm.scale_2d();
    let mut out = Vec::with_capacity(levels);
    let mut cur = field.clone();
    for level in 1..=levels {
        let (w, h) = (cur.width() / 2, cur.height() / 2);
        let mut a = Vec::with_capacity(w * h);
        let mut hd = Vec::with_capacity(w * h);
        let mut vd = Vec::with_capacity(w * h);
        let mut dd = Vec::with_capacity(w * h);
        for y in 0..h {
            for x in 0..w {
                let p00 = cur.get(2 * x, 2 * y);
                let p10 = cur.get(2 * x + 1, 2 * y);
                let p01 = cur.get(2 * x, 2 * y + 1);
                let p11 = cur.get(2 * x + 1, 2 * y + 1);
                a.push(s * (p00 + p10 + p01 + p11));
                hd.push(s * (p00 - p10 + p01 - p11));
                vd.push(s * (p00 + p10 - p01 - p11));
                dd.push(s * (p00 - p10 - p01 + p11));
            }
        }
        let approximation = GrayField::new(w, h, a)?;
        out.push(PyramidLevel {
            level,
            horizontal: GrayField::new(w, h, hd)?,
            vertical: GrayField::new(w, h, vd)?,
            diagonal: GrayField::new(w, h, dd)?,
            approximation: approximation.clone(),
        });
        cur = approximation;
    }
    Ok(WaveletPyramid {
        normalization: norm,
        levels: out,
    })
}

/// 1D Haar detail coefficients for levels `1..=levels` (finest first).
pub fn haar_1d_details(
    signal: &[f64],
    levels: usize,
    norm: Normalization,
) -> Result<Vec<Vec<f64>>> {
    if levels == 0 || levels >= usize::BITS as usize || signal.len() < (1usize << levels) {
        return Err(Error::invalid(format!(
            "{levels} Haar levels do not fit a signal of length {}",
            signal.len()
        )));
    }
    let s = norm.scale_1d();
    let mut cur = signal.to_vec();
    let mut out = Vec::with_capacity(levels);
    for _ in 0..levels {
        let (approx, detail): (Vec<f64>, Vec<f64>) = cur
            .chunks_exact(2)
            .map(|p| (s * (p[0] + p[1]), s * (p[0] - p[1])))
            .unzip();
        out.push(detail);
        cur = approx;
    }
    Ok(out)
}
