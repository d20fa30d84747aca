//! Structure thresholding: area of the dark object nearest the ROI center.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::field::GrayField;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Connectivity {
    Four,
    Eight,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SthConfig {
    pub quant_levels: usize,
    /// Pixels with level below this are foreground.
    pub dark_threshold: usize,
    pub connectivity: Connectivity,
    /// `(x, y)` in pixel coordinates; the image center when `None`.
    pub roi_center: Option<(f64, f64)>,
}

impl Default for SthConfig {
    fn default() -> Self {
        Self {
            quant_levels: 5,
            dark_threshold: 3,
            connectivity: Connectivity::Eight,
            roi_center: None,
        }
    }
}

impl SthConfig {
    pub fn validate(&self) -> Result<()> {
        if self.quant_levels < 2
            || self.dark_threshold == 0
            || self.dark_threshold >= self.quant_levels
        {
            return Err(Error::invalid(format!(
                "need 2 <= quant_levels and 0 < dark_threshold < quant_levels, got {} and {}",
                self.quant_levels, self.dark_threshold
            )));
        }
        Ok(())
    }
}

/// Rank-based equalization: each value maps to the fraction of pixels not
/// above it, so the output lies in `(0, 1]` and ties share a value.
pub fn hist_equalize(field: &GrayField) -> GrayField {
    let n = field.len();
    let mut order: Vec<usize> = (0..n).collect();
    let data = field.data();
    order.sort_by(|&a, &b| data[a].total_cmp(&data[b]));
    let mut out = vec![0.0; n];
    let mut i = 0;
    while i < n {
        let mut j = i;
        while j + 1 < n && data[order[j + 1]] == data[order[i]] {
            j += 1;
        }
        let cdf = (j + 1) as f64 / n as f64;
        for &k in &order[i..=j] {
            out[k] = cdf;
        }
        i = j + 1;
    }
    GrayField::new(field.width(), field.height(), out).expect("same shape as input")
}

/// Uniform quantization `min(⌊v·L⌋, L − 1)` of values in `[0, 1]`.
pub fn quantize(field: &GrayField, levels: usize) -> Result<Vec<usize>> {
    if levels < 2 {
        return Err(Error::invalid(format!(
            "need at least 2 levels, got {levels}"
        )));
    }
    field
        .data()
        .iter()
        .map(|&v| {
            if (0.0..=1.0).contains(&v) {
                Ok(((v * levels as f64).floor() as usize).min(levels - 1))
            } else {
                Err(Error::invalid(format!(
                    "quantize expects values in [0, 1], got {v}"
                )))
            }
        })
        .collect()
}

#[derive(Debug, Clone, PartialEq)]
pub struct Component {
    pub pixels: Vec<usize>,
    pub centroid: (f64, f64),
}

/// Connected components of `mask` (row-major, `width` wide), in order of
/// their first pixel.
pub fn connected_components(
    mask: &[bool],
    width: usize,
    connectivity: Connectivity,
) -> Vec<Component> {
    let height = mask.len() / width;
    let mut seen = vec![false; mask.len()];
    let mut comps = Vec::new();
    let offsets: &[(i64, i64)] = match connectivity {
        Connectivity::Four => &[(1, 0), (-1, 0), (0, 1), (0, -1)],
        Connectivity::Eight => &[
            (1, 0),
            (-1, 0),
            (0, 1),
            (0, -1),
            (1, 1),
            (1, -1),
            (-1, 1),
            (-1, -1),
        ],
    };
    for start in 0..mask.len() {
        if !mask[start] || seen[start] {
            continue;
        }
        seen[start] = true;
        let mut stack = vec![start];
        let mut pixels = Vec::new();
        while let Some(p) = stack.pop() {
            pixels.push(p);
            let (x, y) = ((p % width) as i64, (p / width) as i64);
            for (dx, dy) in offsets {
                let (nx, ny) = (x + dx, y + dy);
                if nx < 0 || ny < 0 || nx >= width as i64 || ny >= height as i64 {
                    continue;
                }
                let q = ny as usize * width + nx as usize;
                if mask[q] && !seen[q] {
                    seen[q] = true;
                    stack.push(q);
                }
            }
        }
        pixels.sort_unstable();
        let n = pixels.len() as f64;
        let cx = pixels.iter().map(|p| (p % width) as f64).sum::<f64>() / n;
        let cy = pixels.iter().map(|p| (p / width) as f64).sum::<f64>() / n;
        comps.push(Component {
            pixels,
            centroid: (cx, cy),
        });
    }
    comps
}

#[derive(Debug, Clone, PartialEq)]
pub struct SthResult {
    pub area: f64,
    pub centroid: (f64, f64),
    pub components: usize,
}

/// Area in pixels of the selected dark component.
pub fn sth_area(structure: &GrayField, config: &SthConfig) -> Result<f64> {
    sth_detect(structure, config).map(|r| r.area)
}

pub fn sth_detect(structure: &GrayField, config: &SthConfig) -> Result<SthResult> {
    config.validate()?;
    let (w, h) = (structure.width(), structure.height());
    if w < 16 || h < 16 {
        return Err(Error::invalid(format!(
            "STH needs at least 16x16, got {w}x{h}"
        )));
    }
    let levels = quantize(&hist_equalize(structure), config.quant_levels)?;
    let mask: Vec<bool> = levels.iter().map(|&l| l < config.dark_threshold).collect();
    let comps = connected_components(&mask, w, config.connectivity);
    let (cx, cy) = config
        .roi_center
        .unwrap_or(((w as f64 - 1.0) / 2.0, (h as f64 - 1.0) / 2.0));
    let dist = |c: &Component| (c.centroid.0 - cx).hypot(c.centroid.1 - cy);
    // ties go to the earlier component
    let best = comps
        .iter()
        .reduce(|a, b| if dist(b) < dist(a) { b } else { a })
        .ok_or_else(|| Error::degenerate("no dark pixels below the threshold"))?;
    Ok(SthResult {
        area: best.pixels.len() as f64,
        centroid: best.centroid,
        components: comps.len(),
    })
}
