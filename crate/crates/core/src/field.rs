//! Grayscale fields and image file I/O.
//!
//! Intensities are real-valued in memory. Files are 8-bit: binary PGM (P5) is
//! read and written, PNG is read only. RGB input is reduced to gray by the
//! unweighted mean of the three channels.

use std::io::{BufRead, BufReader, Read, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Row-major 2D real field.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GrayField {
    width: usize,
    height: usize,
    data: Vec<f64>,
}

impl GrayField {
    pub fn new(width: usize, height: usize, data: Vec<f64>) -> Result<Self> {
        if width == 0 || height == 0 {
            return Err(Error::invalid(format!(
                "field dimensions must be positive, got {width}x{height}"
            )));
        }
        if data.len() != width * height {
            return Err(Error::invalid(format!(
                "field data length {} does not match {width}x{height}",
                data.len()
            )));
        }
        if let Some(i) = data.iter().position(|v| !v.is_finite()) {
            return Err(Error::invalid(format!("non-finite value at index {i}")));
        }
        Ok(Self {
            width,
            height,
            data,
        })
    }

    /// Builds a field from `f(x, y)`; `x` indexes columns, `y` rows.
    ///
    /// Panics if a dimension is zero or `f` returns a non-finite value.
    pub fn from_fn(width: usize, height: usize, mut f: impl FnMut(usize, usize) -> f64) -> Self {
        let mut data = Vec::with_capacity(width * height);
        for y in 0..height {
            for x in 0..width {
                data.push(f(x, y));
            }
        }
        Self::new(width, height, data).expect("GrayField::from_fn produced an invalid field")
    }

    pub fn constant(width: usize, height: usize, value: f64) -> Self {
        Self::from_fn(width, height, |_, _| value)
    }

    #[inline]
    pub fn width(&self) -> usize {
        self.width
    }

    #[inline]
    pub fn height(&self) -> usize {
        self.height
    }

    #[inline]
    pub fn len(&self) -> usize {
        self.data.len()
    }

    #[inline]
    pub fn is_empty(&self) -> bool {
        self.data.is_empty()
    }

    #[inline]
    pub fn data(&self) -> &[f64] {
        &self.data
    }

    pub fn into_data(self) -> Vec<f64> {
        self.data
    }

    #[inline]
    pub fn get(&self, x: usize, y: usize) -> f64 {
        self.data[y * self.width + x]
    }

    pub fn row(&self, y: usize) -> &[f64] {
        &self.data[y * self.width..(y + 1) * self.width]
    }

    pub fn map(&self, f: impl Fn(f64) -> f64) -> Result<Self> {
        Self::new(
            self.width,
            self.height,
            self.data.iter().map(|&v| f(v)).collect(),
        )
    }

    pub fn mean(&self) -> f64 {
        self.data.iter().sum::<f64>() / self.data.len() as f64
    }

    /// Population variance.
    pub fn variance(&self) -> f64 {
        let m = self.mean();
        self.data.iter().map(|v| (v - m) * (v - m)).sum::<f64>() / self.data.len() as f64
    }

    pub fn same_shape(&self, other: &GrayField) -> bool {
        self.width == other.width && self.height == other.height
    }

    /// Sub-window with top-left corner `(x, y)`.
    pub fn crop(&self, x: usize, y: usize, w: usize, h: usize) -> Result<Self> {
        if w == 0 || h == 0 || x + w > self.width || y + h > self.height {
            return Err(Error::invalid(format!(
                "crop {w}x{h}+{x}+{y} exceeds {}x{} field",
                self.width, self.height
            )));
        }
        let mut data = Vec::with_capacity(w * h);
        for row in y..y + h {
            data.extend_from_slice(&self.row(row)[x..x + w]);
        }
        Ok(Self {
            width: w,
            height: h,
            data,
        })
    }

    /// Square patches of side `size`, scanned left-to-right then
    /// top-to-bottom with step `stride`. Windows that would cross the right or
    /// bottom border are dropped, never padded.
    pub fn extract_patches(&self, size: usize, stride: usize) -> Result<Vec<GrayField>> {
        if size == 0 || stride == 0 {
            return Err(Error::invalid("patch size and stride must be positive"));
        }
        if size > self.width.min(self.height) {
            return Err(Error::invalid(format!(
                "patch size {size} exceeds field dimensions {}x{}",
                self.width, self.height
            )));
        }
        let nx = (self.width - size) / stride + 1;
        let ny = (self.height - size) / stride + 1;
        let mut out = Vec::with_capacity(nx * ny);
        for py in 0..ny {
            for px in 0..nx {
                out.push(self.crop(px * stride, py * stride, size, size)?);
            }
        }
        Ok(out)
    }

    /// 8-bit quantization used at file boundaries: clamp to [0,1], then round
    /// half up.
    pub fn to_bytes(&self) -> Vec<u8> {
        self.data.iter().map(|&v| quantize_byte(v)).collect()
    }

    pub fn from_bytes(width: usize, height: usize, bytes: &[u8]) -> Result<Self> {
        Self::new(
            width,
            height,
            bytes.iter().map(|&b| b as f64 / 255.0).collect(),
        )
    }
}

#[inline]
pub fn quantize_byte(v: f64) -> u8 {
    (v.clamp(0.0, 1.0) * 255.0 + 0.5).floor() as u8
}

/// Reads a P5 PGM or an 8-bit PNG, chosen by magic bytes.
pub fn read_image(path: impl AsRef<Path>) -> Result<GrayField> {
    let path = path.as_ref();
    let bytes = std::fs::read(path).map_err(|e| Error::io(path, e))?;
    if bytes.starts_with(b"P5") {
        decode_pgm(&bytes)
    } else if bytes.starts_with(&[0x89, b'P', b'N', b'G']) {
        decode_png(&bytes)
    } else {
        Err(Error::format(
            "image",
            format!("{}: unrecognized file signature", path.display()),
        ))
    }
}

/// Writes a P5 PGM atomically.
pub fn write_image(field: &GrayField, path: impl AsRef<Path>) -> Result<()> {
    write_atomic(path.as_ref(), &encode_pgm(field))
}

pub fn encode_pgm(field: &GrayField) -> Vec<u8> {
    let mut out = format!("P5\n{} {}\n255\n", field.width, field.height).into_bytes();
    out.extend(field.to_bytes());
    out
}

pub fn decode_pgm(bytes: &[u8]) -> Result<GrayField> {
    let mut reader = BufReader::new(bytes);
    let magic = next_token(&mut reader)?;
    if magic != "P5" {
        return Err(Error::format(
            "PGM header",
            format!("expected P5, got {magic}"),
        ));
    }
    let width = parse_header_int(&mut reader, "width")?;
    let height = parse_header_int(&mut reader, "height")?;
    let maxval = parse_header_int(&mut reader, "maxval")?;
    if maxval == 0 || maxval > 255 {
        return Err(Error::format(
            "PGM header",
            format!("unsupported bit depth (maxval {maxval})"),
        ));
    }
    if width == 0 || height == 0 {
        return Err(Error::format("PGM header", "zero dimension"));
    }
    let mut payload = Vec::with_capacity(width * height);
    reader
        .read_to_end(&mut payload)
        .map_err(|e| Error::format("PGM payload", e.to_string()))?;
    if payload.len() < width * height {
        return Err(Error::format(
            "PGM payload",
            format!("expected {} bytes, found {}", width * height, payload.len()),
        ));
    }
    let scale = maxval as f64;
    GrayField::new(
        width,
        height,
        payload[..width * height]
            .iter()
            .map(|&b| b as f64 / scale)
            .collect(),
    )
}

fn parse_header_int(reader: &mut impl BufRead, what: &str) -> Result<usize> {
    let tok = next_token(reader)?;
    tok.parse()
        .map_err(|_| Error::format("PGM header", format!("bad {what}: {tok:?}")))
}

/// Reads one whitespace-delimited header token, skipping `#` comments, and
/// consumes exactly one trailing whitespace byte.
fn next_token(reader: &mut impl BufRead) -> Result<String> {
    let mut tok = String::new();
    let mut byte = [0u8; 1];
    loop {
        match reader.read(&mut byte) {
            Ok(0) => {
                if tok.is_empty() {
                    return Err(Error::format("PGM header", "unexpected end of file"));
                }
                return Ok(tok);
            }
            Ok(_) => {}
            Err(e) => return Err(Error::format("PGM header", e.to_string())),
        }
        let c = byte[0];
        if c == b'#' && tok.is_empty() {
            let mut sink = Vec::new();
            reader
                .read_until(b'\n', &mut sink)
                .map_err(|e| Error::format("PGM header", e.to_string()))?;
            continue;
        }
        if c.is_ascii_whitespace() {
            if tok.is_empty() {
                continue;
            }
            return Ok(tok);
        }
        tok.push(c as char);
        if tok.len() > 16 {
            return Err(Error::format("PGM header", "token too long"));
        }
    }
}

fn decode_png(bytes: &[u8]) -> Result<GrayField> {
    let decoder = png::Decoder::new(std::io::Cursor::new(bytes));
    let mut reader = decoder
        .read_info()
        .map_err(|e| Error::format("PNG", e.to_string()))?;
    let size = reader
        .output_buffer_size()
        .ok_or_else(|| Error::format("PNG", "image too large"))?;
    let mut buf = vec![0u8; size];
    let info = reader
        .next_frame(&mut buf)
        .map_err(|e| Error::format("PNG", e.to_string()))?;
    if info.bit_depth != png::BitDepth::Eight {
        return Err(Error::format(
            "PNG",
            format!("unsupported bit depth {:?}", info.bit_depth),
        ));
    }
    let channels = match info.color_type {
        png::ColorType::Grayscale => 1,
        png::ColorType::GrayscaleAlpha => 2,
        png::ColorType::Rgb => 3,
        png::ColorType::Rgba => 4,
        png::ColorType::Indexed => {
            return Err(Error::format("PNG", "indexed color is not supported"))
        }
    };
    let (w, h) = (info.width as usize, info.height as usize);
    let mut data = Vec::with_capacity(w * h);
    for y in 0..h {
        let line = &buf[y * info.line_size..y * info.line_size + w * channels];
        for px in line.chunks_exact(channels) {
            let v = match channels {
                1 | 2 => px[0] as f64,
                _ => (px[0] as f64 + px[1] as f64 + px[2] as f64) / 3.0,
            };
            data.push(v / 255.0);
        }
    }
    GrayField::new(w, h, data)
}

/// Writes `bytes` to a sibling temp file and renames it over `path`.
pub fn write_atomic(path: &Path, bytes: &[u8]) -> Result<()> {
    let dir = match path.parent() {
        Some(p) if !p.as_os_str().is_empty() => p,
        _ => Path::new("."),
    };
    let mut tmp = tempfile::NamedTempFile::new_in(dir).map_err(|e| Error::io(path, e))?;
    tmp.write_all(bytes).map_err(|e| Error::io(path, e))?;
    tmp.flush().map_err(|e| Error::io(path, e))?;
    tmp.persist(path).map_err(|e| Error::io(path, e.error))?;
    Ok(())
}

/// Lossless dump: width and height as little-endian `u64`, then the samples
/// as little-endian `f64`, row-major.
pub fn encode_raw(field: &GrayField) -> Vec<u8> {
    let mut out = Vec::with_capacity(16 + 8 * field.len());
    out.extend((field.width as u64).to_le_bytes());
    out.extend((field.height as u64).to_le_bytes());
    for v in &field.data {
        out.extend(v.to_le_bytes());
    }
    out
}

pub fn decode_raw(bytes: &[u8]) -> Result<GrayField> {
    let bad = |d: String| Error::format("raw field", d);
    if bytes.len() < 16 {
        return Err(bad(format!(
            "{} bytes is shorter than the header",
            bytes.len()
        )));
    }
    let word = |i: usize| u64::from_le_bytes(bytes[i..i + 8].try_into().expect("8 bytes"));
    let (w, h) = (word(0), word(8));
    let n = w
        .checked_mul(h)
        .and_then(|n| n.checked_mul(8))
        .and_then(|n| n.checked_add(16));
    if n != Some(bytes.len() as u64) {
        return Err(bad(format!(
            "{w}x{h} header does not match {} bytes",
            bytes.len()
        )));
    }
    let data = bytes[16..]
        .chunks_exact(8)
        .map(|c| f64::from_le_bytes(c.try_into().expect("8 bytes")))
        .collect();
    GrayField::new(w as usize, h as usize, data)
}

pub fn read_raw(path: impl AsRef<Path>) -> Result<GrayField> {
    let path = path.as_ref();
    decode_raw(&std::fs::read(path).map_err(|e| Error::io(path, e))?)
}

pub fn write_raw(field: &GrayField, path: impl AsRef<Path>) -> Result<()> {
    write_atomic(path.as_ref(), &encode_raw(field))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn raw_round_trip() {
        let f = GrayField::from_fn(3, 2, |x, y| x as f64 - 0.1 * y as f64);
        let bytes = encode_raw(&f);
        assert_eq!(bytes.len(), 16 + 48);
        assert_eq!(decode_raw(&bytes).unwrap(), f);
        assert!(decode_raw(&bytes[..40]).is_err());
        assert!(decode_raw(&[0; 8]).is_err());
    }

    fn p5(w: usize, h: usize, px: &[u8]) -> Vec<u8> {
        let mut v = format!("P5\n{w} {h}\n255\n").into_bytes();
        v.extend_from_slice(px);
        v
    }

    #[test]
    fn reads_tiny_p5() {
        let f = decode_pgm(&p5(2, 2, &[0, 255, 128, 64])).unwrap();
        assert_eq!(f.data(), &[0.0, 1.0, 128.0 / 255.0, 64.0 / 255.0]);
    }

    #[test]
    fn header_comments_are_skipped() {
        let mut bytes = b"P5\n# made by hand\n2 1\n# max\n255\n".to_vec();
        bytes.extend_from_slice(&[10, 20]);
        let f = decode_pgm(&bytes).unwrap();
        assert_eq!((f.width(), f.height()), (2, 1));
    }

    #[test]
    fn truncated_payload_is_an_error() {
        assert!(matches!(
            decode_pgm(&p5(2, 2, &[0, 1, 2])),
            Err(Error::Format { .. })
        ));
    }

    #[test]
    fn sixteen_bit_pgm_is_rejected() {
        let bytes = b"P5 1 1 65535\n\0\0".to_vec();
        assert!(decode_pgm(&bytes).is_err());
    }

    #[test]
    fn quantization_rounds_half_up_and_clamps() {
        let f = GrayField::new(3, 1, vec![0.5, 1.2, -0.3]).unwrap();
        assert_eq!(f.to_bytes(), vec![128, 255, 0]);
    }

    #[test]
    fn rejects_non_finite() {
        assert!(GrayField::new(1, 1, vec![f64::NAN]).is_err());
        assert!(GrayField::new(2, 1, vec![0.0]).is_err());
    }

    #[test]
    fn patch_counts() {
        let f = GrayField::constant(64, 64, 0.0);
        assert_eq!(f.extract_patches(32, 32).unwrap().len(), 4);
        let f = GrayField::constant(33, 33, 0.0);
        assert_eq!(f.extract_patches(32, 32).unwrap().len(), 1);
        let f = GrayField::constant(96, 64, 0.0);
        assert_eq!(f.extract_patches(32, 16).unwrap().len(), 15);
        assert!(GrayField::constant(16, 40, 0.0)
            .extract_patches(32, 32)
            .is_err());
    }

    #[test]
    fn patches_copy_source_windows() {
        let f = GrayField::from_fn(10, 7, |x, y| (x * 100 + y) as f64);
        let patches = f.extract_patches(4, 3).unwrap();
        // 3 columns x 2 rows of windows
        assert_eq!(patches.len(), 6);
        let p = &patches[4];
        for y in 0..4 {
            for x in 0..4 {
                assert_eq!(p.get(x, y), f.get(3 + x, 3 + y));
            }
        }
    }

    #[test]
    fn missing_file_is_io_error() {
        assert!(matches!(
            read_image("/nonexistent/definitely/missing.pgm"),
            Err(Error::Io { .. })
        ));
    }
}
