//! Synthetic word-image rendering and corpus ingestion.
//!
//! The renderer composes words from an embedded 5x7 dot-matrix glyph
//! atlas, applies deterministic jitter (padding, spacing perturbation,
//! pixel noise, integer upscaling), and normalizes the result through
//! the same resize/binarize pipeline used for external images. Corpora
//! live on disk as a tab-separated manifest plus one PGM file per word
//! image.

use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use crate::error::{Error, Result};
use crate::image::{read_pgm, resize_to_height, write_pgm, GrayImage, WordImage, DEFAULT_HEIGHT};
use crate::rng::{mix_seed, Rng};

/// A word image with its ground-truth transcription.
#[derive(Clone, Debug, PartialEq)]
pub struct LabeledSample {
    /// Stable identifier (the manifest-relative image path for loaded
    /// corpora).
    pub id: String,
    pub image: WordImage,
    pub label: String,
}

/// One glyph bitmap: `width` x `height` pixels, row-major, 0/1.
#[derive(Clone, Debug)]
pub struct Glyph {
    pub width: usize,
    pub rows: Vec<u8>,
}

/// Character -> bitmap map with a fixed glyph height and base
/// inter-glyph spacing.
#[derive(Clone, Debug)]
pub struct FontAtlas {
    glyph_height: usize,
    spacing: usize,
    glyphs: std::collections::BTreeMap<char, Glyph>,
}

impl FontAtlas {
    /// The embedded 5x7 atlas covering `a-z A-Z 0-9 . , ' " - ;` with
    /// one pixel of base spacing.
    pub fn builtin() -> FontAtlas {
        let mut glyphs = std::collections::BTreeMap::new();
        for &(c, rows) in BUILTIN_5X7 {
            let glyph = Glyph {
                width: 5,
                rows: rows
                    .iter()
                    .flat_map(|r| (0..5).rev().map(move |bit| ((r >> bit) & 1) as u8))
                    .collect(),
            };
            glyphs.insert(c, glyph);
        }
        FontAtlas {
            glyph_height: 7,
            spacing: 1,
            glyphs,
        }
    }

    pub fn glyph_height(&self) -> usize {
        self.glyph_height
    }

    pub fn spacing(&self) -> usize {
        self.spacing
    }

    pub fn glyph(&self, c: char) -> Result<&Glyph> {
        self.glyphs.get(&c).ok_or(Error::UnknownGlyph(c))
    }

    pub fn has_glyph(&self, c: char) -> bool {
        self.glyphs.contains_key(&c)
    }

    /// First character of `text` without a glyph, if any.
    pub fn missing_glyph(&self, text: &str) -> Option<char> {
        text.chars().find(|c| !self.has_glyph(*c))
    }
}

/// Deterministic rendering perturbations.
#[derive(Clone, Debug)]
pub struct RenderJitter {
    /// Maximum horizontal padding per side, in glyph-scale pixels
    /// (actual pad drawn uniformly from 0..=pad_max).
    pub pad_max: usize,
    /// Maximum extra spacing inserted per glyph gap.
    pub spacing_jitter: usize,
    /// Per-pixel flip probability, at most 0.05.
    pub noise_prob: f64,
    /// Integer upscale factor applied before noise and resizing.
    pub scale: usize,
    /// Base seed mixed with the per-call seed.
    pub seed: u64,
}

impl RenderJitter {
    /// No padding, no spacing perturbation, no noise, unit scale.
    pub fn none() -> RenderJitter {
        RenderJitter {
            pad_max: 0,
            spacing_jitter: 0,
            noise_prob: 0.0,
            scale: 1,
            seed: 0,
        }
    }

    fn validate(&self) -> Result<()> {
        if !(0.0..=0.05).contains(&self.noise_prob) {
            return Err(Error::InvalidInput(format!(
                "noise probability {} outside [0, 0.05]",
                self.noise_prob
            )));
        }
        if self.scale == 0 {
            return Err(Error::InvalidInput("scale factor must be >= 1".into()));
        }
        Ok(())
    }
}

/// Compose `text` at glyph scale: concatenated glyph bitmaps with
/// (possibly jittered) spacing and horizontal padding, upscaled by the
/// jitter's integer factor and speckled with pixel noise. This is the
/// pre-resize stage of [`render_word`], exposed for geometry checks.
pub fn compose_word(
    text: &str,
    atlas: &FontAtlas,
    jitter: &RenderJitter,
    rng: &mut Rng,
) -> Result<GrayImage> {
    jitter.validate()?;
    if text.is_empty() {
        return Err(Error::InvalidInput("cannot render an empty word".into()));
    }
    let glyphs: Vec<&Glyph> = text
        .chars()
        .map(|c| atlas.glyph(c))
        .collect::<Result<_>>()?;

    let pad_left = if jitter.pad_max > 0 { rng.below(jitter.pad_max + 1) } else { 0 };
    let pad_right = if jitter.pad_max > 0 { rng.below(jitter.pad_max + 1) } else { 0 };
    let gaps: Vec<usize> = (1..glyphs.len())
        .map(|_| {
            atlas.spacing
                + if jitter.spacing_jitter > 0 { rng.below(jitter.spacing_jitter + 1) } else { 0 }
        })
        .collect();

    let width =
        pad_left + pad_right + glyphs.iter().map(|g| g.width).sum::<usize>() + gaps.iter().sum::<usize>();
    let height = atlas.glyph_height();
    let mut base = GrayImage::new(width, height);
    let mut x = pad_left;
    for (i, glyph) in glyphs.iter().enumerate() {
        for gy in 0..height {
            for gx in 0..glyph.width {
                if glyph.rows[gy * glyph.width + gx] == 1 {
                    base.set(x + gx, gy, 255);
                }
            }
        }
        x += glyph.width;
        if i + 1 < glyphs.len() {
            x += gaps[i];
        }
    }

    // integer upscale
    let mut img = if jitter.scale > 1 {
        let s = jitter.scale;
        let mut up = GrayImage::new(width * s, height * s);
        for yy in 0..height * s {
            for xx in 0..width * s {
                up.set(xx, yy, base.get(xx / s, yy / s));
            }
        }
        up
    } else {
        base
    };

    // pixel-flip noise, row-major scan order
    if jitter.noise_prob > 0.0 {
        for y in 0..img.height {
            for x in 0..img.width {
                if rng.next_f64() < jitter.noise_prob {
                    let v = img.get(x, y);
                    img.set(x, y, if v >= 128 { 0 } else { 255 });
                }
            }
        }
    }
    Ok(img)
}

/// Render `text` to a binary word image of the default model height.
/// A pure function of (text, atlas, jitter, seed).
pub fn render_word(
    text: &str,
    atlas: &FontAtlas,
    jitter: &RenderJitter,
    seed: u64,
) -> Result<WordImage> {
    render_word_to(text, atlas, jitter, seed, DEFAULT_HEIGHT)
}

/// [`render_word`] with an explicit target height.
pub fn render_word_to(
    text: &str,
    atlas: &FontAtlas,
    jitter: &RenderJitter,
    seed: u64,
    target_h: usize,
) -> Result<WordImage> {
    let mut rng = Rng::new(mix_seed(&[jitter.seed, seed]));
    let composed = compose_word(text, atlas, jitter, &mut rng)?;
    resize_to_height(&composed, target_h)
}

/// Read a corpus manifest: one `<relative image path>\t<label>` record
/// per line, UTF-8, `#` lines ignored. Images are resized to `target_h`
/// and binarized on load.
pub fn load_corpus(manifest: &Path, target_h: usize) -> Result<Vec<LabeledSample>> {
    let text = fs::read_to_string(manifest)
        .map_err(|e| Error::Data(format!("{}: {}", manifest.display(), e)))?;
    let base = manifest.parent().unwrap_or(Path::new("."));
    let mut samples = Vec::new();
    for (lineno, line) in text.lines().enumerate() {
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let (rel, label) = line.split_once('\t').ok_or_else(|| {
            Error::Data(format!(
                "{}:{}: expected <path>\\t<label>",
                manifest.display(),
                lineno + 1
            ))
        })?;
        if label.is_empty() {
            return Err(Error::Data(format!(
                "{}:{}: empty label",
                manifest.display(),
                lineno + 1
            )));
        }
        let gray = read_pgm(&base.join(rel))?;
        let image = resize_to_height(&gray, target_h)?;
        samples.push(LabeledSample {
            id: rel.to_string(),
            image,
            label: label.to_string(),
        });
    }
    Ok(samples)
}

/// A synthetic corpus laid out on disk: `images/*.pgm` plus
/// `manifest.tsv` in `dir`.
pub struct SynthSpec<'a> {
    pub words: &'a [String],
    /// Renderings per word.
    pub renderings: usize,
    pub jitter: RenderJitter,
    pub seed: u64,
}

/// Render a corpus deterministically and write it under `dir`.
/// Returns the manifest path. Validates every word against the atlas
/// before writing anything, so a bad word list leaves no partial tree.
pub fn write_synth_corpus(dir: &Path, atlas: &FontAtlas, spec: &SynthSpec) -> Result<PathBuf> {
    if spec.words.is_empty() {
        return Err(Error::InvalidInput("empty word list".into()));
    }
    if spec.renderings == 0 {
        return Err(Error::InvalidInput("renderings per word must be >= 1".into()));
    }
    let bad: Vec<String> = spec
        .words
        .iter()
        .filter_map(|w| atlas.missing_glyph(w).map(|c| format!("{w:?} (char {c:?})")))
        .collect();
    if !bad.is_empty() {
        return Err(Error::Data(format!(
            "words with unsupported glyphs: {}",
            bad.join(", ")
        )));
    }

    let images = dir.join("images");
    fs::create_dir_all(&images)?;
    let mut manifest = String::new();
    for (wi, word) in spec.words.iter().enumerate() {
        for r in 0..spec.renderings {
            let seed = mix_seed(&[spec.seed, wi as u64, r as u64]);
            let img = render_word(word, atlas, &spec.jitter, seed)?;
            let rel = format!("images/w{wi:04}_r{r:02}.pgm");
            write_pgm(&dir.join(&rel), &img.to_gray())?;
            let _ = writeln!(manifest, "{rel}\t{word}");
        }
    }
    let manifest_path = dir.join("manifest.tsv");
    fs::write(&manifest_path, manifest)?;
    Ok(manifest_path)
}

/// Embedded 5x7 glyphs; each row byte uses its low five bits, most
/// significant bit leftmost.
#[rustfmt::skip]
const BUILTIN_5X7: &[(char, [u8; 7])] = &[
    ('A', [0b01110, 0b10001, 0b10001, 0b11111, 0b10001, 0b10001, 0b10001]),
    ('B', [0b11110, 0b10001, 0b10001, 0b11110, 0b10001, 0b10001, 0b11110]),
    ('C', [0b01110, 0b10001, 0b10000, 0b10000, 0b10000, 0b10001, 0b01110]),
    ('D', [0b11110, 0b10001, 0b10001, 0b10001, 0b10001, 0b10001, 0b11110]),
    ('E', [0b11111, 0b10000, 0b10000, 0b11110, 0b10000, 0b10000, 0b11111]),
    ('F', [0b11111, 0b10000, 0b10000, 0b11110, 0b10000, 0b10000, 0b10000]),
    ('G', [0b01110, 0b10001, 0b10000, 0b10111, 0b10001, 0b10001, 0b01111]),
    ('H', [0b10001, 0b10001, 0b10001, 0b11111, 0b10001, 0b10001, 0b10001]),
    ('I', [0b01110, 0b00100, 0b00100, 0b00100, 0b00100, 0b00100, 0b01110]),
    ('J', [0b00111, 0b00010, 0b00010, 0b00010, 0b00010, 0b10010, 0b01100]),
    ('K', [0b10001, 0b10010, 0b10100, 0b11000, 0b10100, 0b10010, 0b10001]),
    ('L', [0b10000, 0b10000, 0b10000, 0b10000, 0b10000, 0b10000, 0b11111]),
    ('M', [0b10001, 0b11011, 0b10101, 0b10101, 0b10001, 0b10001, 0b10001]),
    ('N', [0b10001, 0b10001, 0b11001, 0b10101, 0b10011, 0b10001, 0b10001]),
    ('O', [0b01110, 0b10001, 0b10001, 0b10001, 0b10001, 0b10001, 0b01110]),
    ('P', [0b11110, 0b10001, 0b10001, 0b11110, 0b10000, 0b10000, 0b10000]),
    ('Q', [0b01110, 0b10001, 0b10001, 0b10001, 0b10101, 0b10010, 0b01101]),
    ('R', [0b11110, 0b10001, 0b10001, 0b11110, 0b10100, 0b10010, 0b10001]),
    ('S', [0b01111, 0b10000, 0b10000, 0b01110, 0b00001, 0b00001, 0b11110]),
    ('T', [0b11111, 0b00100, 0b00100, 0b00100, 0b00100, 0b00100, 0b00100]),
    ('U', [0b10001, 0b10001, 0b10001, 0b10001, 0b10001, 0b10001, 0b01110]),
    ('V', [0b10001, 0b10001, 0b10001, 0b10001, 0b10001, 0b01010, 0b00100]),
    ('W', [0b10001, 0b10001, 0b10001, 0b10101, 0b10101, 0b10101, 0b01010]),
    ('X', [0b10001, 0b10001, 0b01010, 0b00100, 0b01010, 0b10001, 0b10001]),
    ('Y', [0b10001, 0b10001, 0b01010, 0b00100, 0b00100, 0b00100, 0b00100]),
    ('Z', [0b11111, 0b00001, 0b00010, 0b00100, 0b01000, 0b10000, 0b11111]),
    ('a', [0b00000, 0b00000, 0b01110, 0b00001, 0b01111, 0b10001, 0b01111]),
    ('b', [0b10000, 0b10000, 0b10110, 0b11001, 0b10001, 0b10001, 0b11110]),
    ('c', [0b00000, 0b00000, 0b01110, 0b10000, 0b10000, 0b10001, 0b01110]),
    ('d', [0b00001, 0b00001, 0b01101, 0b10011, 0b10001, 0b10001, 0b01111]),
    ('e', [0b00000, 0b00000, 0b01110, 0b10001, 0b11111, 0b10000, 0b01110]),
    ('f', [0b00110, 0b01001, 0b01000, 0b11100, 0b01000, 0b01000, 0b01000]),
    ('g', [0b00000, 0b01111, 0b10001, 0b10001, 0b01111, 0b00001, 0b01110]),
    ('h', [0b10000, 0b10000, 0b10110, 0b11001, 0b10001, 0b10001, 0b10001]),
    ('i', [0b00100, 0b00000, 0b01100, 0b00100, 0b00100, 0b00100, 0b01110]),
    ('j', [0b00010, 0b00000, 0b00110, 0b00010, 0b00010, 0b10010, 0b01100]),
    ('k', [0b10000, 0b10000, 0b10010, 0b10100, 0b11000, 0b10100, 0b10010]),
    ('l', [0b01100, 0b00100, 0b00100, 0b00100, 0b00100, 0b00100, 0b01110]),
    ('m', [0b00000, 0b00000, 0b11010, 0b10101, 0b10101, 0b10101, 0b10101]),
    ('n', [0b00000, 0b00000, 0b10110, 0b11001, 0b10001, 0b10001, 0b10001]),
    ('o', [0b00000, 0b00000, 0b01110, 0b10001, 0b10001, 0b10001, 0b01110]),
    ('p', [0b00000, 0b00000, 0b11110, 0b10001, 0b11110, 0b10000, 0b10000]),
    ('q', [0b00000, 0b00000, 0b01101, 0b10011, 0b01111, 0b00001, 0b00001]),
    ('r', [0b00000, 0b00000, 0b10110, 0b11001, 0b10000, 0b10000, 0b10000]),
    ('s', [0b00000, 0b00000, 0b01110, 0b10000, 0b01110, 0b00001, 0b11110]),
    ('t', [0b01000, 0b01000, 0b11100, 0b01000, 0b01000, 0b01001, 0b00110]),
    ('u', [0b00000, 0b00000, 0b10001, 0b10001, 0b10001, 0b10011, 0b01101]),
    ('v', [0b00000, 0b00000, 0b10001, 0b10001, 0b10001, 0b01010, 0b00100]),
    ('w', [0b00000, 0b00000, 0b10001, 0b10001, 0b10101, 0b10101, 0b01010]),
    ('x', [0b00000, 0b00000, 0b10001, 0b01010, 0b00100, 0b01010, 0b10001]),
    ('y', [0b00000, 0b00000, 0b10001, 0b10001, 0b01111, 0b00001, 0b01110]),
    ('z', [0b00000, 0b00000, 0b11111, 0b00010, 0b00100, 0b01000, 0b11111]),
    ('0', [0b01110, 0b10001, 0b10011, 0b10101, 0b11001, 0b10001, 0b01110]),
    ('1', [0b00100, 0b01100, 0b00100, 0b00100, 0b00100, 0b00100, 0b01110]),
    ('2', [0b01110, 0b10001, 0b00001, 0b00010, 0b00100, 0b01000, 0b11111]),
    ('3', [0b11111, 0b00010, 0b00100, 0b00010, 0b00001, 0b10001, 0b01110]),
    ('4', [0b00010, 0b00110, 0b01010, 0b10010, 0b11111, 0b00010, 0b00010]),
    ('5', [0b11111, 0b10000, 0b11110, 0b00001, 0b00001, 0b10001, 0b01110]),
    ('6', [0b00110, 0b01000, 0b10000, 0b11110, 0b10001, 0b10001, 0b01110]),
    ('7', [0b11111, 0b00001, 0b00010, 0b00100, 0b01000, 0b01000, 0b01000]),
    ('8', [0b01110, 0b10001, 0b10001, 0b01110, 0b10001, 0b10001, 0b01110]),
    ('9', [0b01110, 0b10001, 0b10001, 0b01111, 0b00001, 0b00010, 0b01100]),
    ('.', [0b00000, 0b00000, 0b00000, 0b00000, 0b00000, 0b01100, 0b01100]),
    (',', [0b00000, 0b00000, 0b00000, 0b00000, 0b01100, 0b00100, 0b01000]),
    ('\'', [0b01100, 0b00100, 0b01000, 0b00000, 0b00000, 0b00000, 0b00000]),
    ('"', [0b01010, 0b01010, 0b01010, 0b00000, 0b00000, 0b00000, 0b00000]),
    ('-', [0b00000, 0b00000, 0b00000, 0b01110, 0b00000, 0b00000, 0b00000]),
    (';', [0b00000, 0b01100, 0b01100, 0b00000, 0b01100, 0b00100, 0b01000]),
];
