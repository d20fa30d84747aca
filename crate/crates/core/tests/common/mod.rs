#![allow(dead_code)]

use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use twoview::fbm::{synth_fbm_spectral, FbmParams};
use twoview::field::write_image;
use twoview::GrayField;

pub fn twoview(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_twoview"))
        .args(args)
        .output()
        .expect("binary runs")
}

pub fn p(path: &Path) -> &str {
    path.to_str().expect("utf-8 path")
}

/// Rescales to [0.1, 0.9] for 8-bit storage.
pub fn to_unit(field: &GrayField) -> GrayField {
    let lo = field.data().iter().cloned().fold(f64::INFINITY, f64::min);
    let hi = field
        .data()
        .iter()
        .cloned()
        .fold(f64::NEG_INFINITY, f64::max);
    field.map(|v| 0.1 + 0.8 * (v - lo) / (hi - lo)).unwrap()
}

/// Two classes of 64×64 textures: rough fBm and smooth fBm with a dark
/// central disc. Writes the images and `manifest.csv` into `dir`.
pub fn write_two_class_manifest(dir: &Path, per_class: usize) -> PathBuf {
    let mut lines = String::from("path,label\n");
    for i in 0..per_class {
        for (class, h) in [("rough", 0.3), ("smooth", 0.8)] {
            let params = FbmParams::new(h, 1.0).unwrap();
            let f = to_unit(&synth_fbm_spectral(&params, 64, 1000 + i as u64).unwrap());
            let f = if class == "smooth" {
                GrayField::from_fn(64, 64, |x, y| {
                    let r = ((x as f64 - 32.0).powi(2) + (y as f64 - 32.0).powi(2)).sqrt();
                    if r < 14.0 {
                        0.15 * f.get(x, y)
                    } else {
                        f.get(x, y)
                    }
                })
            } else {
                f
            };
            let name = format!("{class}_{i:02}.pgm");
            write_image(&f, dir.join(&name)).unwrap();
            lines.push_str(&format!("{name},{class}\n"));
        }
    }
    let m = dir.join("manifest.csv");
    std::fs::write(&m, lines).unwrap();
    m
}

/// Config for quick runs on tiny datasets.
pub fn write_fast_config(dir: &Path) -> PathBuf {
    let c = dir.join("fast.cfg");
    std::fs::write(
        &c,
        "rtv.iterations = 2\nnn.epochs = 200\nnn.restarts = 2\nfeatures.structural_mode = sth\n",
    )
    .unwrap();
    c
}
