//! Dataset manifests: a CSV listing of images with class labels.
//!
//! ```text
//! path,label[,roi_x,roi_y,roi_w,roi_h]
//! sand/01.png,sand
//! sand/02.png,sand,10,10,64,64
//! ```
//!
//! Relative paths resolve against the manifest's directory. Labels are
//! arbitrary strings, remapped densely to `0..k` in order of first
//! appearance.

use std::collections::{HashMap, HashSet};
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::field::{read_image, GrayField};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Roi {
    pub x: usize,
    pub y: usize,
    pub w: usize,
    pub h: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ManifestEntry {
    /// Path as written in the manifest.
    pub path: String,
    /// Path resolved against the manifest location.
    pub resolved: PathBuf,
    pub label: usize,
    pub roi: Option<Roi>,
}

impl ManifestEntry {
    /// Loads the image and crops it to the ROI when one is given.
    pub fn load(&self) -> Result<GrayField> {
        let img = read_image(&self.resolved)?;
        match self.roi {
            Some(r) => img.crop(r.x, r.y, r.w, r.h),
            None => Ok(img),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DatasetManifest {
    pub entries: Vec<ManifestEntry>,
    /// Original label text for each dense class index.
    pub class_names: Vec<String>,
}

impl DatasetManifest {
    pub fn class_count(&self) -> usize {
        self.class_names.len()
    }

    pub fn labels(&self) -> Vec<usize> {
        self.entries.iter().map(|e| e.label).collect()
    }
}

pub fn load_manifest(path: impl AsRef<Path>) -> Result<DatasetManifest> {
    let path = path.as_ref();
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    let base = path.parent().map(Path::to_path_buf).unwrap_or_default();
    parse_manifest(&text, &base)
}

pub fn parse_manifest(text: &str, base: &Path) -> Result<DatasetManifest> {
    let mut rdr = csv::ReaderBuilder::new()
        .has_headers(true)
        .trim(csv::Trim::All)
        .flexible(true)
        .from_reader(text.as_bytes());

    let headers = rdr
        .headers()
        .map_err(|e| Error::format("manifest header", e.to_string()))?
        .clone();
    let cols: Vec<&str> = headers.iter().collect();
    if cols.len() < 2 || cols[0] != "path" || cols[1] != "label" {
        return Err(Error::format(
            "manifest header",
            format!("expected `path,label[,roi_x,roi_y,roi_w,roi_h]`, got {cols:?}"),
        ));
    }
    let has_roi = match &cols[2..] {
        [] => false,
        ["roi_x", "roi_y", "roi_w", "roi_h"] => true,
        other => {
            return Err(Error::format(
                "manifest header",
                format!("unexpected columns {other:?}"),
            ))
        }
    };

    let mut class_names: Vec<String> = Vec::new();
    let mut class_index: HashMap<String, usize> = HashMap::new();
    let mut seen_paths = HashSet::new();
    let mut entries = Vec::new();

    for (i, rec) in rdr.records().enumerate() {
        let line = i + 2;
        let rec = rec.map_err(|e| Error::format("manifest row", format!("line {line}: {e}")))?;
        if rec.len() != 2 && !(has_roi && (rec.len() == 6 || rec.len() == 2)) {
            return Err(Error::format(
                "manifest row",
                format!(
                    "line {line}: expected {} fields, got {}",
                    cols.len(),
                    rec.len()
                ),
            ));
        }
        let rel = rec[0].to_string();
        let label_text = rec[1].to_string();
        if rel.is_empty() || label_text.is_empty() {
            return Err(Error::format(
                "manifest row",
                format!("line {line}: empty field"),
            ));
        }
        if !seen_paths.insert(rel.clone()) {
            return Err(Error::invalid(format!("duplicate manifest path {rel:?}")));
        }
        let roi = if rec.len() == 6 {
            let mut v = [0usize; 4];
            for (k, slot) in v.iter_mut().enumerate() {
                *slot = rec[2 + k].parse().map_err(|_| {
                    Error::format(
                        "manifest row",
                        format!("line {line}: bad ROI value {:?}", &rec[2 + k]),
                    )
                })?;
            }
            if v[2] == 0 || v[3] == 0 {
                return Err(Error::format(
                    "manifest row",
                    format!("line {line}: empty ROI"),
                ));
            }
            Some(Roi {
                x: v[0],
                y: v[1],
                w: v[2],
                h: v[3],
            })
        } else {
            None
        };
        let next = class_names.len();
        let label = *class_index.entry(label_text.clone()).or_insert_with(|| {
            class_names.push(label_text);
            next
        });
        entries.push(ManifestEntry {
            resolved: base.join(&rel),
            path: rel,
            label,
            roi,
        });
    }

    if class_names.len() < 2 {
        return Err(Error::invalid(format!(
            "manifest needs at least 2 classes, found {}",
            class_names.len()
        )));
    }
    let mut counts = vec![0usize; class_names.len()];
    for e in &entries {
        counts[e.label] += 1;
    }
    if let Some((c, n)) = counts.iter().enumerate().find(|(_, &n)| n < 2) {
        return Err(Error::invalid(format!(
            "class {:?} has {n} example(s); at least 2 required",
            class_names[c]
        )));
    }
    Ok(DatasetManifest {
        entries,
        class_names,
    })
}
