//! Word tokenization, text measurement, and glyph drawing.
//!
//! Measurement and drawing walk the same per-character advances, so a
//! measured run is exactly as wide as the drawn one.

use std::sync::Arc;

use image::{Rgb, RgbImage};
use serde::{Deserialize, Serialize};

use super::fonts::FontLibrary;
use crate::sampling::FontSpec;

/// Splits `value` into lines of whitespace-separated words. Lines are kept
/// (an empty line yields an empty list); words are never empty.
pub fn tokenize_words(value: &str) -> Vec<Vec<String>> {
    value
        .split('\n')
        .map(|line| line.split_whitespace().map(str::to_string).collect())
        .collect()
}

/// One word placed on a line, `x` relative to the line start.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct TokenSpan {
    pub text: String,
    pub x: u32,
    pub width: u32,
}

#[derive(Debug, Clone)]
pub struct TextEngine {
    fonts: Arc<FontLibrary>,
    space_width_weight: f64,
}

impl TextEngine {
    pub fn new(fonts: Arc<FontLibrary>, space_width_weight: f64) -> Self {
        Self {
            fonts,
            space_width_weight,
        }
    }

    pub fn fonts(&self) -> &FontLibrary {
        &self.fonts
    }

    pub fn line_height(&self, font: &FontSpec) -> u32 {
        self.fonts.face(&font.face).line_height(font.size)
    }

    fn char_advance(&self, font: &FontSpec, c: char) -> u32 {
        let resolved = self.fonts.resolve(&font.face, c);
        self.fonts.advance_resolved(resolved, font.size)
    }

    pub fn space_advance(&self, font: &FontSpec) -> u32 {
        let base = self.char_advance(font, ' ') as f64;
        (base * self.space_width_weight).round() as u32
    }

    /// Horizontal extent of a word: pixels of ink left of the pen start
    /// (negative bearings), and the total width covering both the pen
    /// advances and all ink.
    fn word_extent(&self, font: &FontSpec, word: &str) -> (u32, u32) {
        let (mut pen, mut lo, mut hi) = (0i64, 0i64, 0i64);
        for c in word.chars() {
            let resolved = self.fonts.resolve(&font.face, c);
            let g = self.fonts.glyph(resolved, font.size);
            if g.width > 0 {
                lo = lo.min(pen + g.left as i64);
                hi = hi.max(pen + g.left as i64 + g.width as i64);
            }
            pen += self.fonts.advance_resolved(resolved, font.size) as i64;
        }
        hi = hi.max(pen);
        ((-lo) as u32, (hi - lo) as u32)
    }

    pub fn word_width(&self, font: &FontSpec, word: &str) -> u32 {
        self.word_extent(font, word).1
    }

    /// Places `words` left to right separated by single (weighted) spaces.
    pub fn layout_words(&self, words: &[String], font: &FontSpec) -> Vec<TokenSpan> {
        let space = self.space_advance(font);
        let mut x = 0;
        let mut spans = Vec::with_capacity(words.len());
        for (i, w) in words.iter().enumerate() {
            if i > 0 {
                x += space;
            }
            let width = self.word_width(font, w);
            spans.push(TokenSpan {
                text: w.clone(),
                x,
                width,
            });
            x += width;
        }
        spans
    }

    pub fn words_width(&self, words: &[String], font: &FontSpec) -> u32 {
        self.layout_words(words, font)
            .last()
            .map_or(0, |s| s.x + s.width)
    }

    /// Width of the widest line and total height; `""` measures `(0, line height)`.
    pub fn measure_text(&self, text: &str, font: &FontSpec) -> (u32, u32) {
        let lines = tokenize_words(text);
        let width = lines
            .iter()
            .map(|l| self.words_width(l, font))
            .max()
            .unwrap_or(0);
        (width, lines.len().max(1) as u32 * self.line_height(font))
    }

    /// Draws `text` laid out exactly as [`Self::layout_words`] places it,
    /// starting at `(x, y)` (line top). Pixels outside the canvas are clipped.
    pub fn draw_run(&self, canvas: &mut RgbImage, x: i64, y: i64, text: &str, font: &FontSpec) {
        let words: Vec<String> = text.split_whitespace().map(str::to_string).collect();
        for span in self.layout_words(&words, font) {
            self.draw_word(canvas, x + span.x as i64, y, &span.text, font);
        }
    }

    /// Draws one word so that its ink starts no further left than `x`.
    pub fn draw_word(&self, canvas: &mut RgbImage, x: i64, y: i64, word: &str, font: &FontSpec) {
        let color = font.color.0;
        let mut pen = x + self.word_extent(font, word).0 as i64;
        for c in word.chars() {
            let resolved = self.fonts.resolve(&font.face, c);
            let g = self.fonts.glyph(resolved, font.size);
            blend_mask(canvas, pen + g.left as i64, y + g.top as i64, g.width, g.height, &g.coverage, color);
            pen += self.fonts.advance_resolved(resolved, font.size) as i64;
        }
    }
}

fn blend_mask(canvas: &mut RgbImage, x0: i64, y0: i64, w: u32, h: u32, mask: &[u8], color: [u8; 3]) {
    let (cw, ch) = (canvas.width() as i64, canvas.height() as i64);
    for my in 0..h as i64 {
        let py = y0 + my;
        if py < 0 || py >= ch {
            continue;
        }
        for mx in 0..w as i64 {
            let px = x0 + mx;
            if px < 0 || px >= cw {
                continue;
            }
            let a = mask[(my * w as i64 + mx) as usize] as u32;
            if a == 0 {
                continue;
            }
            let p = canvas.get_pixel_mut(px as u32, py as u32);
            let blended: [u8; 3] = std::array::from_fn(|i| {
                ((p.0[i] as u32 * (255 - a) + color[i] as u32 * a + 127) / 255) as u8
            });
            *p = Rgb(blended);
        }
    }
}
