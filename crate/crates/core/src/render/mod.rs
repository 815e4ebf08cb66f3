//! Rasterization of a laid-out document and word-level geometry capture.

pub mod fonts;
pub mod text;

use image::codecs::png::{CompressionType, FilterType, PngEncoder};
use image::{ExtendedColorType, ImageEncoder, Rgb, RgbImage};
use serde::{Deserialize, Serialize};

use crate::geometry::Rect;
use crate::layout::{LayoutPlan, Role};
use crate::values::DocumentInstance;

use text::TextEngine;

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct RenderedToken {
    pub text: String,
    pub rect: Rect,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct RenderedEntity {
    pub role: Role,
    /// Entity name for values and entity headers, group name for group headers.
    pub label: String,
    pub group: String,
    /// Lines joined with newlines, words single-spaced.
    pub text: String,
    pub rect: Rect,
    pub tokens: Vec<RenderedToken>,
}

pub struct RenderedDocument {
    pub image: RgbImage,
    pub entities: Vec<RenderedEntity>,
    /// Red boxes over every token and group, when requested.
    pub debug_image: Option<RgbImage>,
}

const DEBUG_RED: Rgb<u8> = Rgb([220, 20, 20]);

pub fn render_document(doc: &DocumentInstance, plan: &LayoutPlan, engine: &TextEngine, width: u32, height: u32, debug: bool) -> RenderedDocument {
    let bg = Rgb(doc.permutation.style.canvas_color.0);
    let mut image = RgbImage::from_pixel(width, height, bg);
    let mut entities = Vec::new();
    for (placement, measured) in plan.placements.iter().zip(&plan.blocks) {
        let (ox, oy) = (placement.rect.x, placement.rect.y);
        for rule in &measured.rules {
            fill_rect(&mut image, rule.translate(ox, oy), Rgb(measured.rule_color.0));
        }
        for block in measured.blocks.iter().filter(|b| b.has_tokens()) {
            let mut tokens = Vec::new();
            for line in &block.lines {
                for span in &line.tokens {
                    let rect = Rect::new(ox + line.x + span.x, oy + line.y, span.width, line.height);
                    engine.draw_word(&mut image, rect.x as i64, rect.y as i64, &span.text, &block.font);
                    tokens.push(RenderedToken {
                        text: span.text.clone(),
                        rect,
                    });
                }
            }
            entities.push(RenderedEntity {
                role: block.role,
                label: block.label.clone(),
                group: placement.group.clone(),
                text: block.text(),
                rect: Rect::union_all(tokens.iter().map(|t| &t.rect)).expect("block has tokens"),
                tokens,
            });
        }
    }
    let debug_image = debug.then(|| {
        let mut dbg = image.clone();
        for p in &plan.placements {
            outline_rect(&mut dbg, p.rect, DEBUG_RED);
        }
        for t in entities.iter().flat_map(|e| &e.tokens) {
            outline_rect(&mut dbg, t.rect, DEBUG_RED);
        }
        dbg
    });
    RenderedDocument {
        image,
        entities,
        debug_image,
    }
}

fn fill_rect(img: &mut RgbImage, r: Rect, color: Rgb<u8>) {
    for y in r.y..r.bottom().min(img.height()) {
        for x in r.x..r.right().min(img.width()) {
            img.put_pixel(x, y, color);
        }
    }
}

fn outline_rect(img: &mut RgbImage, r: Rect, color: Rgb<u8>) {
    if r.w == 0 || r.h == 0 {
        return;
    }
    let (right, bottom) = (r.right() - 1, r.bottom() - 1);
    for x in r.x..=right {
        for y in [r.y, bottom] {
            if x < img.width() && y < img.height() {
                img.put_pixel(x, y, color);
            }
        }
    }
    for y in r.y..=bottom {
        for x in [r.x, right] {
            if x < img.width() && y < img.height() {
                img.put_pixel(x, y, color);
            }
        }
    }
}

/// Lossless RGB PNG bytes.
pub fn encode_png(img: &RgbImage) -> Result<Vec<u8>, image::ImageError> {
    let mut out = Vec::new();
    PngEncoder::new_with_quality(&mut out, CompressionType::Fast, FilterType::Sub).write_image(
        img.as_raw(),
        img.width(),
        img.height(),
        ExtendedColorType::Rgb8,
    )?;
    Ok(out)
}
