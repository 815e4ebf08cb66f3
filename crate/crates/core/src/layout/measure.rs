//! Group measurement: turns one instantiated group into a block of placed
//! text lines and table rules, positioned relative to the group origin.

use std::collections::VecDeque;

use serde::{Deserialize, Serialize};

use crate::geometry::Rect;
use crate::render::text::{tokenize_words, TextEngine, TokenSpan};
use crate::sampling::{FontSpec, FrozenGroup, LayoutMode, StyleChoice, TableLayout};
use crate::schema::{Alignment, Color, SeparatorStyle, StructuralConfig, TabType};
use crate::values::GroupInstance;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Role {
    Value,
    EntityHeader,
    GroupHeader,
}

/// One line of a text block, relative to the group origin.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct PlacedLine {
    pub x: u32,
    pub y: u32,
    pub height: u32,
    pub tokens: Vec<TokenSpan>,
}

/// A header or value as it will be drawn.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct TextBlock {
    pub role: Role,
    /// Entity name for values and entity headers, group name for group headers.
    pub label: String,
    pub font: FontSpec,
    pub lines: Vec<PlacedLine>,
}

impl TextBlock {
    /// Line texts (single-spaced words) joined with newlines.
    pub fn text(&self) -> String {
        self.lines
            .iter()
            .map(|l| {
                l.tokens
                    .iter()
                    .map(|t| t.text.as_str())
                    .collect::<Vec<_>>()
                    .join(" ")
            })
            .collect::<Vec<_>>()
            .join("\n")
    }

    pub fn has_tokens(&self) -> bool {
        self.lines.iter().any(|l| !l.tokens.is_empty())
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct MeasuredGroup {
    pub width: u32,
    pub height: u32,
    pub blocks: Vec<TextBlock>,
    /// Table separator rules, relative to the group origin.
    pub rules: Vec<Rect>,
    pub rule_color: Color,
}

/// Pixel reduction per shrink step.
pub const SHRINK_STEP_PX: u32 = 2;

/// Font sizes after `steps` shrink steps, never below `min_size`
/// (or the original size, when that is already smaller).
pub fn shrink_font(font: &FontSpec, steps: u32, min_size: u32) -> FontSpec {
    let floor = min_size.min(font.size);
    FontSpec {
        size: font.size.saturating_sub(steps * SHRINK_STEP_PX).max(floor),
        ..font.clone()
    }
}

/// Measurement inputs shared by every group of a document.
pub struct MeasureContext<'a> {
    pub engine: &'a TextEngine,
    pub style: &'a StyleChoice,
    pub structural: &'a StructuralConfig,
    pub shrink: u32,
    pub min_font_size: u32,
}

impl MeasureContext<'_> {
    fn font(&self, font: &FontSpec) -> FontSpec {
        shrink_font(font, self.shrink, self.min_font_size)
    }
}

fn align_offset(align: Alignment, outer: u32, inner: u32) -> u32 {
    let slack = outer.saturating_sub(inner);
    match align {
        Alignment::Left => 0,
        Alignment::Center => slack / 2,
        Alignment::Right => slack,
    }
}

/// A laid-out text fragment awaiting its final position.
struct Fragment {
    block: usize,
    x: u32,
}

struct LineDraft {
    parts: Vec<Fragment>,
    width: u32,
    height: u32,
    align: Alignment,
    gap_before: u32,
}

struct Builder<'e> {
    engine: &'e TextEngine,
    blocks: Vec<TextBlock>,
    /// Token lines per block, consumed as drafts are placed.
    pending: Vec<VecDeque<Vec<TokenSpan>>>,
}

impl<'e> Builder<'e> {
    fn new(engine: &'e TextEngine) -> Self {
        Self {
            engine,
            blocks: Vec::new(),
            pending: Vec::new(),
        }
    }

    /// Registers a block; returns its index and per-line widths.
    fn block(&mut self, role: Role, label: &str, text: &str, font: &FontSpec) -> (usize, Vec<u32>) {
        let lines: VecDeque<Vec<TokenSpan>> = tokenize_words(text)
            .iter()
            .map(|words| self.engine.layout_words(words, font))
            .collect();
        let widths = lines
            .iter()
            .map(|l| l.last().map_or(0, |s| s.x + s.width))
            .collect();
        self.blocks.push(TextBlock {
            role,
            label: label.to_string(),
            font: font.clone(),
            lines: Vec::new(),
        });
        self.pending.push(lines);
        (self.blocks.len() - 1, widths)
    }

    fn line_height(&self, block: usize) -> u32 {
        self.engine.line_height(&self.blocks[block].font)
    }

    /// Appends the next pending line of `block` at `(x, y)`.
    fn place(&mut self, block: usize, x: u32, y: u32) {
        let height = self.line_height(block);
        let tokens = self.pending[block].pop_front().unwrap_or_default();
        self.blocks[block].lines.push(PlacedLine {
            x,
            y,
            height,
            tokens,
        });
    }
}

/// Lays out stacked lines vertically; returns the height used.
fn place_drafts(b: &mut Builder<'_>, drafts: &[LineDraft], x0: u32, y0: u32, width: u32) -> u32 {
    let mut y = y0;
    for d in drafts {
        y += d.gap_before;
        let off = align_offset(d.align, width, d.width);
        for f in &d.parts {
            b.place(f.block, x0 + off + f.x, y);
        }
        y += d.height;
    }
    y - y0
}

fn draft_block_lines(
    b: &Builder<'_>,
    block: usize,
    widths: &[u32],
    align: Alignment,
    gap_before: u32,
    out: &mut Vec<LineDraft>,
) {
    let h = b.line_height(block);
    for (i, &w) in widths.iter().enumerate() {
        out.push(LineDraft {
            parts: vec![Fragment { block, x: 0 }],
            width: w,
            height: h,
            align,
            gap_before: if i == 0 { gap_before } else { 0 },
        });
    }
}

fn finalize(b: Builder<'_>) -> Vec<TextBlock> {
    debug_assert!(b.pending.iter().all(VecDeque::is_empty), "unplaced lines");
    b.blocks
}

/// Measures a group and positions its text relative to the group origin.
pub fn measure_group(group: &FrozenGroup, inst: &GroupInstance, ctx: &MeasureContext<'_>) -> MeasuredGroup {
    match &group.layout_mode {
        LayoutMode::Stacked => measure_stacked(group, inst, ctx),
        LayoutMode::Table(t) => measure_table(group, inst, t, ctx),
    }
}

fn measure_stacked(group: &FrozenGroup, inst: &GroupInstance, ctx: &MeasureContext<'_>) -> MeasuredGroup {
    let s = ctx.structural;
    let mut b = Builder::new(ctx.engine);
    let mut drafts = Vec::new();
    if let Some(h) = &inst.header {
        let font = ctx.font(&ctx.style.group_header);
        let (blk, widths) = b.block(Role::GroupHeader, &group.name, &h.text, &font);
        draft_block_lines(&b, blk, &widths, group.alignment, 0, &mut drafts);
    }
    for (fe, ei) in group.entities.iter().zip(&inst.entities) {
        let gap = if drafts.is_empty() { 0 } else { s.intra_group_y_offset };
        let value_font = ctx.font(&fe.font);
        let value = ei.values.first().map(String::as_str).unwrap_or_default();
        let header = ei.header.as_ref().map(|h| {
            let font = ctx.font(&ctx.style.entity_header);
            b.block(Role::EntityHeader, &fe.name, &h.text, &font)
        });
        let (vblk, vwidths) = b.block(Role::Value, &fe.name, value, &value_font);
        match header {
            Some((hblk, hwidths)) if vwidths.len() == 1 && hwidths.len() == 1 => {
                let vx = hwidths[0] + s.intra_group_x_offset;
                drafts.push(LineDraft {
                    parts: vec![Fragment { block: hblk, x: 0 }, Fragment { block: vblk, x: vx }],
                    width: vx + vwidths[0],
                    height: b.line_height(hblk).max(b.line_height(vblk)),
                    align: fe.alignment,
                    gap_before: gap,
                });
            }
            Some((hblk, hwidths)) => {
                draft_block_lines(&b, hblk, &hwidths, fe.header_alignment, gap, &mut drafts);
                draft_block_lines(&b, vblk, &vwidths, fe.alignment, 0, &mut drafts);
            }
            None => draft_block_lines(&b, vblk, &vwidths, fe.alignment, gap, &mut drafts),
        }
    }
    let width = drafts.iter().map(|d| d.width).max().unwrap_or(0);
    let height = place_drafts(&mut b, &drafts, 0, 0, width);
    MeasuredGroup {
        width,
        height,
        blocks: finalize(b),
        rules: Vec::new(),
        rule_color: ctx.style.entity_value.color,
    }
}

/// A table cell before placement: block index, line widths, alignment.
struct Cell {
    block: usize,
    widths: Vec<u32>,
    align: Alignment,
}

impl Cell {
    fn width(&self) -> u32 {
        self.widths.iter().copied().max().unwrap_or(0)
    }
}

fn measure_table(
    group: &FrozenGroup,
    inst: &GroupInstance,
    table: &TableLayout,
    ctx: &MeasureContext<'_>,
) -> MeasuredGroup {
    let s = ctx.structural;
    let pad = table.style.cell_padding;
    let header_font = ctx.font(&table.style.header_font);
    let row_font = ctx.font(&table.style.row_font);
    let header_lh = ctx.engine.line_height(&header_font);
    let row_lh = ctx.engine.line_height(&row_font);
    let mut b = Builder::new(ctx.engine);

    let group_header = inst.header.as_ref().map(|h| {
        let font = ctx.font(&ctx.style.group_header);
        b.block(Role::GroupHeader, &group.name, &h.text, &font)
    });

    let has_headers = inst.entities.iter().any(|e| e.header.is_some());
    let rows = table.row_count as usize;
    let empty = table.empty_row_count as usize;
    // cells[e][0] is the header cell (when present), then one cell per value row.
    let mut cells: Vec<Vec<Option<Cell>>> = Vec::with_capacity(inst.entities.len());
    for (fe, ei) in group.entities.iter().zip(&inst.entities) {
        let mut col = Vec::with_capacity(rows + 1);
        if has_headers {
            col.push(ei.header.as_ref().map(|h| {
                let (block, widths) = b.block(Role::EntityHeader, &fe.name, &h.text, &header_font);
                Cell {
                    block,
                    widths,
                    align: fe.header_alignment,
                }
            }));
        }
        for r in 0..rows {
            let value = ei.values.get(r).map(String::as_str).unwrap_or_default();
            let (block, widths) = b.block(Role::Value, &fe.name, value, &row_font);
            col.push(Some(Cell {
                block,
                widths,
                align: fe.alignment,
            }));
        }
        cells.push(col);
    }
    let slots = rows + usize::from(has_headers);
    let slot_lh = |slot: usize| if has_headers && slot == 0 { header_lh } else { row_lh };
    let cell_h = |c: &Option<Cell>, slot: usize| c.as_ref().map_or(0, |c| c.widths.len() as u32 * slot_lh(slot));
    let cell_w = |c: &Option<Cell>| c.as_ref().map_or(0, Cell::width);
    let empty_w = 2 * row_lh;

    // Track sizes along the entity axis and along the slot axis.
    let entity_extent: Vec<u32>;
    let slot_extent: Vec<u32>;
    let horizontal = table.orientation == TabType::Horizontal;
    if horizontal {
        entity_extent = cells
            .iter()
            .map(|col| col.iter().map(cell_w).max().unwrap_or(0) + 2 * pad)
            .collect();
        slot_extent = (0..slots)
            .map(|slot| {
                cells
                    .iter()
                    .map(|col| cell_h(&col[slot], slot))
                    .max()
                    .unwrap_or(0)
                    .max(slot_lh(slot))
                    + 2 * pad
            })
            .chain(std::iter::repeat_n(row_lh + 2 * pad, empty))
            .collect();
    } else {
        entity_extent = cells
            .iter()
            .map(|row| {
                row.iter()
                    .enumerate()
                    .map(|(slot, c)| cell_h(c, slot))
                    .max()
                    .unwrap_or(0)
                    .max(row_lh)
                    + 2 * pad
            })
            .collect();
        slot_extent = (0..slots)
            .map(|slot| cells.iter().map(|row| cell_w(&row[slot])).max().unwrap_or(0) + 2 * pad)
            .chain(std::iter::repeat_n(empty_w + 2 * pad, empty))
            .collect();
    }
    let offsets = |sizes: &[u32]| {
        let mut acc = 0;
        sizes
            .iter()
            .map(|&v| {
                let o = acc;
                acc += v;
                o
            })
            .collect::<Vec<u32>>()
    };
    let entity_off = offsets(&entity_extent);
    let slot_off = offsets(&slot_extent);
    let (table_w, table_h) = if horizontal {
        (entity_extent.iter().sum::<u32>(), slot_extent.iter().sum::<u32>())
    } else {
        (slot_extent.iter().sum::<u32>(), entity_extent.iter().sum::<u32>())
    };

    let header_w = group_header
        .as_ref()
        .map_or(0, |(_, w)| w.iter().copied().max().unwrap_or(0));
    let width = table_w.max(header_w);
    let mut y = 0;
    if let Some((blk, widths)) = &group_header {
        let mut drafts = Vec::new();
        draft_block_lines(&b, *blk, widths, group.alignment, 0, &mut drafts);
        y = place_drafts(&mut b, &drafts, 0, 0, width) + s.intra_group_y_offset;
    }
    let tx = align_offset(group.alignment, width, table_w);
    let ty = y;

    for (e, col) in cells.iter().enumerate() {
        for (slot, cell) in col.iter().enumerate() {
            let Some(cell) = cell else { continue };
            let (cx, cy, cw) = if horizontal {
                (tx + entity_off[e], ty + slot_off[slot], entity_extent[e])
            } else {
                (tx + slot_off[slot], ty + entity_off[e], slot_extent[slot])
            };
            let inner = cw - 2 * pad;
            let lh = slot_lh(slot);
            for (i, &w) in cell.widths.iter().enumerate() {
                let x = cx + pad + align_offset(cell.align, inner, w);
                b.place(cell.block, x, cy + pad + i as u32 * lh);
            }
        }
    }

    let mut rules = Vec::new();
    if pad > 0 {
        let (col_sizes, row_sizes) = if horizontal {
            (&entity_extent, &slot_extent)
        } else {
            (&slot_extent, &entity_extent)
        };
        let col_off = offsets(col_sizes);
        let row_off = offsets(row_sizes);
        match table.style.separator {
            SeparatorStyle::None => {}
            SeparatorStyle::Lines => {
                for &ro in row_off.iter().skip(1) {
                    rules.push(Rect::new(tx, ty + ro, table_w, 1));
                }
            }
            SeparatorStyle::Grid => {
                for &ro in &row_off {
                    rules.push(Rect::new(tx, ty + ro, table_w, 1));
                }
                rules.push(Rect::new(tx, ty + table_h - 1, table_w, 1));
                for &co in &col_off {
                    rules.push(Rect::new(tx + co, ty, 1, table_h));
                }
                rules.push(Rect::new(tx + table_w - 1, ty, 1, table_h));
            }
        }
    }

    MeasuredGroup {
        width,
        height: ty + table_h,
        blocks: finalize(b),
        rules,
        rule_color: table.style.row_font.color,
    }
}

#[cfg(test)]
mod tests {
    use std::sync::Arc;

    use super::*;
    use crate::render::fonts::{FixedMetricsFace, FontLibrary};
    use crate::sampling::{FrozenEntity, TableStyle};
    use crate::values::{EntityInstance, HeaderText};

    fn engine() -> TextEngine {
        let mut lib = FontLibrary::builtin();
        lib.insert(Arc::new(FixedMetricsFace::new("stub", 10, 20)));
        TextEngine::new(Arc::new(lib), 1.0)
    }

    fn stub() -> FontSpec {
        FontSpec {
            face: "stub".into(),
            size: 12,
            color: Color::BLACK,
        }
    }

    fn style() -> StyleChoice {
        StyleChoice {
            canvas_color: Color::WHITE,
            group_header: stub(),
            entity_header: stub(),
            entity_value: stub(),
        }
    }

    fn entity(name: &str, header: Option<&str>, values: &[&str]) -> (FrozenEntity, EntityInstance) {
        (
            FrozenEntity {
                name: name.into(),
                entity_type: "free_text".into(),
                schema_index: 0,
                header: header.map(String::from),
                alignment: Alignment::Left,
                header_alignment: Alignment::Left,
                font: stub(),
            },
            EntityInstance {
                name: name.into(),
                entity_type: "free_text".into(),
                header: header.map(HeaderText::untranslated),
                values: values.iter().map(|v| v.to_string()).collect(),
                locale: "en".into(),
            },
        )
    }

    fn group(
        header: Option<&str>,
        mode: LayoutMode,
        entities: Vec<(FrozenEntity, EntityInstance)>,
    ) -> (FrozenGroup, GroupInstance) {
        let (fes, eis): (Vec<_>, Vec<_>) = entities.into_iter().unzip();
        (
            FrozenGroup {
                name: "G".into(),
                schema_index: 0,
                segment: 0,
                header: header.map(String::from),
                layout_mode: mode,
                grid_position: None,
                alignment: Alignment::Left,
                entities: fes,
            },
            GroupInstance {
                name: "G".into(),
                header: header.map(HeaderText::untranslated),
                entities: eis,
            },
        )
    }

    fn structural(intra_y: u32) -> StructuralConfig {
        StructuralConfig {
            intra_group_y_offset: intra_y,
            ..StructuralConfig::default()
        }
    }

    fn table(orientation: TabType, rows: u32, pad: u32) -> LayoutMode {
        LayoutMode::Table(TableLayout {
            orientation,
            row_count: rows,
            empty_row_count: 0,
            style: TableStyle {
                header_font: stub(),
                row_font: stub(),
                separator: SeparatorStyle::Grid,
                cell_padding: pad,
            },
        })
    }

    #[test]
    fn stacked_header_and_value() {
        let e = engine();
        let st = style();
        let s = structural(5);
        let ctx = MeasureContext {
            engine: &e,
            style: &st,
            structural: &s,
            shrink: 0,
            min_font_size: 12,
        };
        let (g, i) = group(Some("Delivery Info"), LayoutMode::Stacked, vec![entity("n", None, &["ACME"])]);
        let m = measure_group(&g, &i, &ctx);
        assert_eq!((m.width, m.height), (130, 45));
        assert_eq!(m.blocks[1].lines[0].y, 25);
    }

    #[test]
    fn inline_and_stacked_entity_headers() {
        let e = engine();
        let st = style();
        let s = structural(5);
        let ctx = MeasureContext {
            engine: &e,
            style: &st,
            structural: &s,
            shrink: 0,
            min_font_size: 12,
        };
        let (g, i) = group(
            None,
            LayoutMode::Stacked,
            vec![entity("a", Some("Tel"), &["555"]), entity("b", Some("Ship To"), &["1 Main St\nSpringfield"])],
        );
        let m = measure_group(&g, &i, &ctx);
        // "Tel" + 12 + "555" = 30 + 12 + 30; "Springfield" = 110.
        assert_eq!(m.width, 110);
        assert_eq!(m.height, 20 + 5 + 20 + 20 + 20);
        assert_eq!(m.blocks[1].lines[0].x, 42);
        assert_eq!(m.blocks[3].lines.len(), 2);
        assert_eq!(m.blocks[3].text(), "1 Main St\nSpringfield");
    }

    #[test]
    fn table_width_is_content_plus_padding() {
        let e = engine();
        let st = style();
        let s = structural(5);
        let ctx = MeasureContext {
            engine: &e,
            style: &st,
            structural: &s,
            shrink: 0,
            min_font_size: 12,
        };
        let (g, i) = group(
            None,
            table(TabType::Horizontal, 3, 4),
            vec![entity("a", None, &["ab", "abcd", "a"]), entity("b", None, &["abcdef", "a", "ab"])],
        );
        let m = measure_group(&g, &i, &ctx);
        assert_eq!(m.width, 40 + 60 + 4 * 2 * 2);
        assert_eq!(m.height, 3 * (20 + 8));
    }

    #[test]
    fn orientations_hold_the_same_cells() {
        let e = engine();
        let st = style();
        let s = structural(5);
        let ctx = MeasureContext {
            engine: &e,
            style: &st,
            structural: &s,
            shrink: 0,
            min_font_size: 12,
        };
        let ents = || vec![entity("a", Some("A"), &["x1", "x2"]), entity("b", Some("B"), &["y1", "y2"])];
        let (gh, ih) = group(Some("T"), table(TabType::Horizontal, 2, 3), ents());
        let (gv, iv) = group(Some("T"), table(TabType::Vertical, 2, 3), ents());
        let mh = measure_group(&gh, &ih, &ctx);
        let mv = measure_group(&gv, &iv, &ctx);
        let set = |m: &MeasuredGroup| {
            let mut v: Vec<_> = m.blocks.iter().map(|b| (b.role, b.label.clone(), b.text())).collect();
            v.sort_by(|a, b| format!("{a:?}").cmp(&format!("{b:?}")));
            v
        };
        assert_eq!(set(&mh), set(&mv));
        assert_ne!((mh.width, mh.height), (mv.width, mv.height));
    }

    #[test]
    fn shrink_respects_floor() {
        let f = FontSpec {
            face: "x".into(),
            size: 15,
            color: Color::BLACK,
        };
        assert_eq!(shrink_font(&f, 1, 12).size, 13);
        assert_eq!(shrink_font(&f, 5, 12).size, 12);
        assert_eq!(shrink_font(&f, 5, 20).size, 15);
    }
}
