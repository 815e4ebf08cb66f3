//! Font faces: built-in bitmap faces and TrueType faces loaded from disk.
//!
//! Built-in faces scale the 8x8 bitmap glyphs of `font8x8`. A face of pixel
//! size `s` has line height `s`; one design unit is `s / 10` pixels and the
//! 8-row glyph occupies design rows 1..9, leaving a unit of leading above and
//! below.

use std::collections::{BTreeMap, HashMap};
use std::fs;
use std::path::Path;
use std::sync::{Arc, RwLock};

use ab_glyph::{Font, FontArc, PxScale, ScaleFont};
use font8x8::UnicodeFonts;
use thiserror::Error;

pub const BUILTIN_SANS: &str = "builtin-sans";
pub const BUILTIN_MONO: &str = "builtin-mono";
pub const BUILTIN_BOLD: &str = "builtin-bold";

/// Character drawn when no face has a glyph.
pub const REPLACEMENT_CHAR: char = '?';

#[derive(Debug, Error)]
pub enum FontError {
    #[error("cannot read font directory {path}: {message}")]
    Dir { path: String, message: String },
    #[error("cannot load font {path}: {message}")]
    Load { path: String, message: String },
    #[error("font directory {0} contains no .ttf or .otf files")]
    Empty(String),
}

/// Coverage mask for one glyph, positioned relative to the pen: `left` from
/// the pen x, `top` from the line top.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct GlyphBitmap {
    pub left: i32,
    pub top: i32,
    pub width: u32,
    pub height: u32,
    pub coverage: Vec<u8>,
}

impl GlyphBitmap {
    pub fn empty() -> Self {
        Self {
            left: 0,
            top: 0,
            width: 0,
            height: 0,
            coverage: Vec::new(),
        }
    }
}

pub trait FontFace: Send + Sync {
    fn name(&self) -> &str;
    fn has_glyph(&self, c: char) -> bool;
    /// Pen advance in whole pixels.
    fn advance(&self, c: char, size: u32) -> u32;
    fn line_height(&self, size: u32) -> u32;
    fn rasterize(&self, c: char, size: u32) -> GlyphBitmap;
}

const EURO: [u8; 8] = [0x38, 0x44, 0x1F, 0x04, 0x1F, 0x44, 0x38, 0x00];

fn bitmap_rows(c: char) -> Option<[u8; 8]> {
    if c == '€' {
        return Some(EURO);
    }
    font8x8::BASIC_FONTS
        .get(c)
        .or_else(|| font8x8::LATIN_FONTS.get(c))
        .or_else(|| font8x8::GREEK_FONTS.get(c))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum BitmapStyle {
    Proportional,
    Monospace,
    Bold,
}

/// A scaled 8x8 bitmap face.
#[derive(Debug, Clone)]
pub struct BuiltinFace {
    name: String,
    style: BitmapStyle,
}

/// Glyph columns (bit `i` = column `i`), left shift and advance in design units.
struct DesignGlyph {
    rows: [u16; 8],
    advance: u32,
}

const SPACE_UNITS: u32 = 4;

impl BuiltinFace {
    pub fn sans() -> Self {
        Self {
            name: BUILTIN_SANS.into(),
            style: BitmapStyle::Proportional,
        }
    }

    pub fn mono() -> Self {
        Self {
            name: BUILTIN_MONO.into(),
            style: BitmapStyle::Monospace,
        }
    }

    pub fn bold() -> Self {
        Self {
            name: BUILTIN_BOLD.into(),
            style: BitmapStyle::Bold,
        }
    }

    fn design(&self, c: char) -> DesignGlyph {
        let raw = bitmap_rows(c)
            .or_else(|| bitmap_rows(REPLACEMENT_CHAR))
            .expect("replacement glyph exists");
        let mut rows = raw.map(u16::from);
        if self.style == BitmapStyle::Bold {
            rows = rows.map(|r| r | (r << 1));
        }
        if self.style == BitmapStyle::Monospace {
            return DesignGlyph { rows, advance: 8 };
        }
        let ink = rows.iter().fold(0u16, |acc, r| acc | r);
        if ink == 0 {
            return DesignGlyph {
                rows,
                advance: SPACE_UNITS,
            };
        }
        let first = ink.trailing_zeros();
        let last = 15 - ink.leading_zeros();
        DesignGlyph {
            rows: rows.map(|r| r >> first),
            advance: last - first + 2,
        }
    }
}

fn units_to_px(units: u32, size: u32) -> u32 {
    (units * size + 5) / 10
}

impl FontFace for BuiltinFace {
    fn name(&self) -> &str {
        &self.name
    }

    fn has_glyph(&self, c: char) -> bool {
        bitmap_rows(c).is_some() || c.is_whitespace()
    }

    fn advance(&self, c: char, size: u32) -> u32 {
        units_to_px(self.design(c).advance, size)
    }

    fn line_height(&self, size: u32) -> u32 {
        size
    }

    fn rasterize(&self, c: char, size: u32) -> GlyphBitmap {
        let g = self.design(c);
        let width = units_to_px(g.advance, size);
        let height = size;
        let unit = size as f32 / 10.0;
        let mut coverage = vec![0u8; (width * height) as usize];
        for (row, bits) in g.rows.iter().enumerate() {
            if *bits == 0 {
                continue;
            }
            let y0 = (row as f32 + 1.0) * unit;
            let y1 = y0 + unit;
            for col in 0..16u32 {
                if bits & (1 << col) == 0 {
                    continue;
                }
                let x0 = col as f32 * unit;
                let x1 = x0 + unit;
                let py_start = y0.floor() as u32;
                let py_end = (y1.ceil() as u32).min(height);
                let px_start = x0.floor() as u32;
                let px_end = (x1.ceil() as u32).min(width);
                for py in py_start..py_end {
                    let oy = (y1.min(py as f32 + 1.0) - y0.max(py as f32)).max(0.0);
                    for px in px_start..px_end {
                        let ox = (x1.min(px as f32 + 1.0) - x0.max(px as f32)).max(0.0);
                        let idx = (py * width + px) as usize;
                        let v = coverage[idx] as f32 + ox * oy * 255.0;
                        coverage[idx] = v.round().min(255.0) as u8;
                    }
                }
            }
        }
        GlyphBitmap {
            left: 0,
            top: 0,
            width,
            height,
            coverage,
        }
    }
}

/// Constant-metric face: every glyph has the same advance and line height
/// and draws as a filled block inset by one pixel. Used for arithmetic checks.
#[derive(Debug, Clone)]
pub struct FixedMetricsFace {
    name: String,
    advance: u32,
    line_height: u32,
}

impl FixedMetricsFace {
    pub fn new(name: &str, advance: u32, line_height: u32) -> Self {
        Self {
            name: name.into(),
            advance,
            line_height,
        }
    }
}

impl FontFace for FixedMetricsFace {
    fn name(&self) -> &str {
        &self.name
    }

    fn has_glyph(&self, _: char) -> bool {
        true
    }

    fn advance(&self, _: char, _: u32) -> u32 {
        self.advance
    }

    fn line_height(&self, _: u32) -> u32 {
        self.line_height
    }

    fn rasterize(&self, c: char, _: u32) -> GlyphBitmap {
        if c.is_whitespace() || self.advance < 3 || self.line_height < 3 {
            return GlyphBitmap::empty();
        }
        let (w, h) = (self.advance - 2, self.line_height - 2);
        GlyphBitmap {
            left: 1,
            top: 1,
            width: w,
            height: h,
            coverage: vec![255; (w * h) as usize],
        }
    }
}

/// A TrueType/OpenType face. Advances are rounded per character so that
/// measurement and drawing agree exactly.
pub struct TtfFace {
    name: String,
    font: FontArc,
}

impl TtfFace {
    pub fn from_bytes(name: &str, bytes: Vec<u8>) -> Result<Self, FontError> {
        let font = FontArc::try_from_vec(bytes).map_err(|e| FontError::Load {
            path: name.into(),
            message: e.to_string(),
        })?;
        Ok(Self {
            name: name.into(),
            font,
        })
    }
}

impl FontFace for TtfFace {
    fn name(&self) -> &str {
        &self.name
    }

    fn has_glyph(&self, c: char) -> bool {
        c.is_whitespace() || self.font.glyph_id(c).0 != 0
    }

    fn advance(&self, c: char, size: u32) -> u32 {
        let scaled = self.font.as_scaled(PxScale::from(size as f32));
        scaled.h_advance(self.font.glyph_id(c)).round().max(0.0) as u32
    }

    fn line_height(&self, size: u32) -> u32 {
        let scaled = self.font.as_scaled(PxScale::from(size as f32));
        scaled.height().ceil() as u32
    }

    fn rasterize(&self, c: char, size: u32) -> GlyphBitmap {
        let scale = PxScale::from(size as f32);
        let ascent = self.font.as_scaled(scale).ascent();
        let glyph = self
            .font
            .glyph_id(c)
            .with_scale_and_position(scale, ab_glyph::point(0.0, ascent));
        let Some(outline) = self.font.outline_glyph(glyph) else {
            return GlyphBitmap::empty();
        };
        let bounds = outline.px_bounds();
        let width = bounds.width().max(0.0) as u32;
        let height = bounds.height().max(0.0) as u32;
        let mut coverage = vec![0u8; (width * height) as usize];
        outline.draw(|x, y, v| {
            if x < width && y < height {
                coverage[(y * width + x) as usize] = (v.clamp(0.0, 1.0) * 255.0).round() as u8;
            }
        });
        GlyphBitmap {
            left: bounds.min.x as i32,
            top: bounds.min.y as i32,
            width,
            height,
            coverage,
        }
    }
}

type GlyphKey = (usize, char, u32);

/// Named faces plus a glyph cache. The first built-in sans face is the
/// fallback for unknown face names and missing glyphs.
pub struct FontLibrary {
    faces: Vec<Arc<dyn FontFace>>,
    by_name: BTreeMap<String, usize>,
    loaded: Vec<String>,
    cache: RwLock<HashMap<GlyphKey, Arc<GlyphBitmap>>>,
}

impl std::fmt::Debug for FontLibrary {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("FontLibrary")
            .field("faces", &self.by_name.keys().collect::<Vec<_>>())
            .finish()
    }
}

impl FontLibrary {
    /// The three built-in bitmap faces.
    pub fn builtin() -> Self {
        let mut lib = Self {
            faces: Vec::new(),
            by_name: BTreeMap::new(),
            loaded: Vec::new(),
            cache: RwLock::new(HashMap::new()),
        };
        lib.insert(Arc::new(BuiltinFace::sans()));
        lib.insert(Arc::new(BuiltinFace::mono()));
        lib.insert(Arc::new(BuiltinFace::bold()));
        lib
    }

    /// Built-in faces plus every `.ttf`/`.otf` in `dir`, named by file stem.
    pub fn with_font_dir(dir: &Path) -> Result<Self, FontError> {
        let mut lib = Self::builtin();
        let entries = fs::read_dir(dir).map_err(|e| FontError::Dir {
            path: dir.display().to_string(),
            message: e.to_string(),
        })?;
        let mut paths: Vec<_> = entries
            .filter_map(|e| e.ok().map(|e| e.path()))
            .filter(|p| {
                matches!(
                    p.extension().and_then(|e| e.to_str()).map(str::to_ascii_lowercase).as_deref(),
                    Some("ttf" | "otf")
                )
            })
            .collect();
        paths.sort();
        if paths.is_empty() {
            return Err(FontError::Empty(dir.display().to_string()));
        }
        for path in paths {
            let bytes = fs::read(&path).map_err(|e| FontError::Load {
                path: path.display().to_string(),
                message: e.to_string(),
            })?;
            let name = path
                .file_stem()
                .and_then(|s| s.to_str())
                .unwrap_or_default()
                .to_string();
            let face = TtfFace::from_bytes(&name, bytes).map_err(|e| match e {
                FontError::Load { message, .. } => FontError::Load {
                    path: path.display().to_string(),
                    message,
                },
                other => other,
            })?;
            lib.loaded.push(name);
            lib.insert(Arc::new(face));
        }
        Ok(lib)
    }

    pub fn insert(&mut self, face: Arc<dyn FontFace>) {
        let name = face.name().to_string();
        if let Some(&idx) = self.by_name.get(&name) {
            self.faces[idx] = face;
        } else {
            self.by_name.insert(name, self.faces.len());
            self.faces.push(face);
        }
        self.cache.write().expect("glyph cache lock").clear();
    }

    pub fn contains(&self, name: &str) -> bool {
        self.by_name.contains_key(name)
    }

    pub fn names(&self) -> impl Iterator<Item = &str> {
        self.by_name.keys().map(String::as_str)
    }

    /// Faces the sampler draws from: loaded files when present, else the built-ins.
    pub fn sampling_faces(&self) -> Vec<String> {
        if self.loaded.is_empty() {
            vec![BUILTIN_SANS.into(), BUILTIN_MONO.into(), BUILTIN_BOLD.into()]
        } else {
            self.loaded.clone()
        }
    }

    fn index(&self, name: &str) -> usize {
        match self.by_name.get(name) {
            Some(&i) => i,
            None => {
                log::warn!("unknown font face `{name}`; using {BUILTIN_SANS}");
                self.by_name[BUILTIN_SANS]
            }
        }
    }

    pub fn face(&self, name: &str) -> &Arc<dyn FontFace> {
        &self.faces[self.index(name)]
    }

    /// Face index and character actually drawn for `c` in face `name`:
    /// the face itself, then the built-in fallback, then the replacement mark.
    pub fn resolve(&self, name: &str, c: char) -> (usize, char) {
        let idx = self.index(name);
        if self.faces[idx].has_glyph(c) {
            return (idx, c);
        }
        let fallback = self.by_name[BUILTIN_SANS];
        if self.faces[fallback].has_glyph(c) {
            (fallback, c)
        } else {
            (idx, REPLACEMENT_CHAR)
        }
    }

    pub fn advance_resolved(&self, (idx, c): (usize, char), size: u32) -> u32 {
        self.faces[idx].advance(c, size)
    }

    pub fn glyph(&self, (idx, c): (usize, char), size: u32) -> Arc<GlyphBitmap> {
        let key = (idx, c, size);
        if let Some(g) = self.cache.read().expect("glyph cache lock").get(&key) {
            return Arc::clone(g);
        }
        let g = Arc::new(self.faces[idx].rasterize(c, size));
        self.cache
            .write()
            .expect("glyph cache lock")
            .entry(key)
            .or_insert(g)
            .clone()
    }
}
