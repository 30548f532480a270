//! Word images and the resize/binarize ingestion pipeline.
//!
//! A [`WordImage`] is a binary image of fixed height (30 px by default)
//! and variable width, consumed column by column by the encoder. Pixel
//! value 1 means ink.
//!
//! Grayscale sources are stored as "ink intensity": 0 = blank paper,
//! 255 = full ink. PGM files follow the usual scanned-text convention
//! (dark pixels are ink), so the reader and writer invert.

use std::fs;
use std::io::Write;
use std::path::Path;

use crate::error::{Error, Result};
use crate::tensor::Vector;

/// Default model input height, in pixels.
pub const DEFAULT_HEIGHT: usize = 30;

/// Grayscale image, row-major, values are ink intensity 0..=255.
#[derive(Clone, Debug, PartialEq)]
pub struct GrayImage {
    pub width: usize,
    pub height: usize,
    pub data: Vec<u8>,
}

impl GrayImage {
    pub fn new(width: usize, height: usize) -> Self {
        GrayImage {
            width,
            height,
            data: vec![0; width * height],
        }
    }

    pub fn get(&self, x: usize, y: usize) -> u8 {
        self.data[y * self.width + x]
    }

    pub fn set(&mut self, x: usize, y: usize, v: u8) {
        self.data[y * self.width + x] = v;
    }
}

/// Binary word image: fixed height, variable width, column-major storage.
#[derive(Clone, Debug, PartialEq)]
pub struct WordImage {
    height: usize,
    width: usize,
    /// Column-major pixels, each 0 or 1; length = width * height.
    data: Vec<u8>,
}

impl WordImage {
    /// Build from column-major binary data. Enforces the type invariants:
    /// width >= 1 and every pixel in {0, 1}.
    pub fn from_column_major(height: usize, width: usize, data: Vec<u8>) -> Result<Self> {
        if width == 0 || height == 0 {
            return Err(Error::InvalidInput("zero-size word image".into()));
        }
        if data.len() != width * height {
            return Err(Error::Shape(format!(
                "word image data length {} != {}x{}",
                data.len(),
                width,
                height
            )));
        }
        if data.iter().any(|&p| p > 1) {
            return Err(Error::InvalidInput("word image pixel outside {0,1}".into()));
        }
        Ok(WordImage { height, width, data })
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn pixel(&self, x: usize, y: usize) -> u8 {
        self.data[x * self.height + y]
    }

    /// Pixel column t as an f64 vector in {0,1}^height.
    pub fn column(&self, t: usize) -> Vector {
        let col = &self.data[t * self.height..(t + 1) * self.height];
        Vector::from_vec(col.iter().map(|&p| p as f64).collect())
    }

    /// Count of ink pixels, handy for sanity checks.
    pub fn ink_count(&self) -> usize {
        self.data.iter().filter(|&&p| p == 1).count()
    }

    pub fn to_gray(&self) -> GrayImage {
        let mut g = GrayImage::new(self.width, self.height);
        for x in 0..self.width {
            for y in 0..self.height {
                g.set(x, y, self.pixel(x, y) * 255);
            }
        }
        g
    }
}

/// Resize a grayscale image to `target_h` keeping aspect ratio, then
/// binarize.
///
/// Width becomes round(width * target_h / height), at least 1. Sampling
/// is nearest neighbor with the source index floor((2d+1) * src / (2 *
/// dst)) (pixel-center mapping in integer arithmetic). Binarization
/// threshold is half the intensity range: ink intensity >= 128 maps
/// to 1.
pub fn resize_to_height(img: &GrayImage, target_h: usize) -> Result<WordImage> {
    if img.width == 0 || img.height == 0 {
        return Err(Error::InvalidInput("cannot resize an empty image".into()));
    }
    if target_h == 0 {
        return Err(Error::InvalidInput("target height must be >= 1".into()));
    }
    // round-half-up in integer arithmetic
    let target_w = ((img.width * target_h * 2 + img.height) / (img.height * 2)).max(1);
    let mut data = vec![0u8; target_w * target_h];
    for x in 0..target_w {
        let sx = nearest_index(x, target_w, img.width);
        for y in 0..target_h {
            let sy = nearest_index(y, target_h, img.height);
            let ink = img.get(sx, sy) >= 128;
            data[x * target_h + y] = ink as u8;
        }
    }
    WordImage::from_column_major(target_h, target_w, data)
}

/// Nearest-neighbor source index for destination index `d`.
fn nearest_index(d: usize, dst_len: usize, src_len: usize) -> usize {
    (((2 * d + 1) * src_len) / (2 * dst_len)).min(src_len - 1)
}

/// Read a binary (P5) PGM file; dark pixels become high ink intensity.
pub fn read_pgm(path: &Path) -> Result<GrayImage> {
    let bytes = fs::read(path).map_err(|e| Error::Data(format!("{}: {}", path.display(), e)))?;
    parse_pgm(&bytes).map_err(|msg| Error::Data(format!("{}: {}", path.display(), msg)))
}

fn parse_pgm(bytes: &[u8]) -> std::result::Result<GrayImage, String> {
    let mut pos = 0usize;
    let token = |pos: &mut usize| -> std::result::Result<String, String> {
        // skip whitespace and '#' comment lines
        loop {
            while *pos < bytes.len() && bytes[*pos].is_ascii_whitespace() {
                *pos += 1;
            }
            if *pos < bytes.len() && bytes[*pos] == b'#' {
                while *pos < bytes.len() && bytes[*pos] != b'\n' {
                    *pos += 1;
                }
            } else {
                break;
            }
        }
        let start = *pos;
        while *pos < bytes.len() && !bytes[*pos].is_ascii_whitespace() {
            *pos += 1;
        }
        if start == *pos {
            return Err("unexpected end of header".into());
        }
        Ok(String::from_utf8_lossy(&bytes[start..*pos]).into_owned())
    };

    let magic = token(&mut pos)?;
    if magic != "P5" {
        return Err(format!("unsupported magic {magic:?}, want P5"));
    }
    let width: usize = token(&mut pos)?.parse().map_err(|_| "bad width".to_string())?;
    let height: usize = token(&mut pos)?.parse().map_err(|_| "bad height".to_string())?;
    let maxval: usize = token(&mut pos)?.parse().map_err(|_| "bad maxval".to_string())?;
    if maxval == 0 || maxval > 255 {
        return Err(format!("unsupported maxval {maxval}"));
    }
    // exactly one whitespace byte separates header and raster
    pos += 1;
    let need = width * height;
    if bytes.len() < pos || bytes.len() - pos < need {
        return Err("truncated pixel data".into());
    }
    let mut data = Vec::with_capacity(need);
    for &p in &bytes[pos..pos + need] {
        // dark = ink; rescale to 0..=255 ink intensity
        let ink = (maxval.saturating_sub(p as usize) * 255) / maxval;
        data.push(ink as u8);
    }
    Ok(GrayImage { width, height, data })
}

/// Write a binary (P5) PGM file; ink intensity maps back to darkness.
pub fn write_pgm(path: &Path, img: &GrayImage) -> Result<()> {
    let mut out = Vec::with_capacity(img.data.len() + 32);
    write!(out, "P5\n{} {}\n255\n", img.width, img.height)?;
    out.extend(img.data.iter().map(|&ink| 255 - ink));
    fs::write(path, out)?;
    Ok(())
}
