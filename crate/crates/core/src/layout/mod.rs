//! Page layout: measures every group, assigns groups to cells of per-section
//! virtual grids, sizes the grids to content, and yields one rectangle per
//! group. A random-placement baseline is available for comparison runs.

mod baseline;
pub mod grid;
pub mod measure;

use rand::RngCore;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::geometry::Rect;
use crate::render::text::TextEngine;
use crate::schema::StructuralConfig;
use crate::values::DocumentInstance;

pub use grid::{assign_cells, place_in_cell, size_grid, Cell, CellAssignment, GridSizing};
pub use measure::{measure_group, shrink_font, MeasureContext, MeasuredGroup, PlacedLine, Role, TextBlock, SHRINK_STEP_PX};

/// Rejection-sampling attempts per group in the random baseline.
pub const BASELINE_ATTEMPTS: u32 = 1000;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum LayoutError {
    #[error("section {section}: groups do not fit")]
    Overflow { section: u32 },
    #[error("section {section}: two groups pinned to cell {cell:?}")]
    PinConflict { section: u32, cell: Cell },
    #[error("section {section}: pinned cell {cell:?} lies outside the grid")]
    PinOutsideGrid { section: u32, cell: Cell },
    #[error("group `{group}` could not be placed")]
    Placement { group: String },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum LayoutKind {
    #[default]
    Grid,
    Random,
}

impl LayoutKind {
    pub fn as_str(self) -> &'static str {
        match self {
            LayoutKind::Grid => "grid",
            LayoutKind::Random => "random",
        }
    }
}

impl std::str::FromStr for LayoutKind {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "grid" => Ok(LayoutKind::Grid),
            "random" => Ok(LayoutKind::Random),
            other => Err(format!("unknown layout mode `{other}` (expected grid or random)")),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct CellEntry {
    pub row: u32,
    pub col: u32,
    /// Index into the document's groups.
    pub group: usize,
}

/// One section's grid after sizing.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct VirtualGrid {
    pub section: u32,
    pub rect: Rect,
    pub rows: u32,
    pub cols: u32,
    pub cells: Vec<CellEntry>,
    pub row_heights: Vec<u32>,
    pub col_widths: Vec<u32>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Placement {
    pub group: String,
    pub section: Option<u32>,
    pub cell: Option<Cell>,
    pub rect: Rect,
    /// Moved out of its sampled segment to relieve an overflow.
    pub spilled: bool,
}

/// Where every group goes, plus the measured content drawn there.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct LayoutPlan {
    pub mode: LayoutKind,
    pub font_shrink: u32,
    pub sections: Vec<VirtualGrid>,
    /// Parallel to the document's groups.
    pub placements: Vec<Placement>,
    #[serde(skip)]
    pub blocks: Vec<MeasuredGroup>,
}

/// Vertical band of section `i`: equal-height slices inside the page margin.
pub fn section_rect(structural: &StructuralConfig, i: u32) -> Rect {
    let m = structural.page_margin;
    let inner_w = structural.canvas_width.saturating_sub(2 * m);
    let inner_h = structural.canvas_height.saturating_sub(2 * m);
    let n = structural.num_segments.max(1);
    let band = inner_h / n;
    Rect::new(m, m + i * band, inner_w, band)
}

pub struct LayoutInput<'a> {
    pub doc: &'a DocumentInstance,
    pub engine: &'a TextEngine,
    pub structural: &'a StructuralConfig,
    /// Lower bound for shrunk fonts.
    pub min_font_size: u32,
}

impl LayoutInput<'_> {
    fn measure(&self, shrink: u32) -> Vec<MeasuredGroup> {
        let ctx = MeasureContext {
            engine: self.engine,
            style: &self.doc.permutation.style,
            structural: self.structural,
            shrink,
            min_font_size: self.min_font_size,
        };
        self.doc
            .permutation
            .groups
            .iter()
            .zip(&self.doc.groups)
            .map(|(g, inst)| measure_group(g, inst, &ctx))
            .collect()
    }
}

/// Escalation steps for grid overflow: (font shrink steps, respill allowed).
const OVERFLOW_POLICY: [(u32, bool); 3] = [(0, false), (1, false), (1, true)];

pub fn plan_layout(input: &LayoutInput<'_>, mode: LayoutKind, rng: &mut dyn RngCore) -> Result<LayoutPlan, LayoutError> {
    match mode {
        LayoutKind::Grid => {
            let mut last = None;
            for (shrink, respill) in OVERFLOW_POLICY {
                let blocks = input.measure(shrink);
                match plan_grid(input, &blocks, respill) {
                    Ok((sections, placements)) => {
                        return Ok(LayoutPlan {
                            mode,
                            font_shrink: shrink,
                            sections,
                            placements,
                            blocks,
                        })
                    }
                    Err(e @ LayoutError::Overflow { .. }) => last = Some(e),
                    Err(e) => return Err(e),
                }
            }
            Err(last.expect("policy has steps"))
        }
        LayoutKind::Random => {
            let blocks = input.measure(0);
            let placements = baseline::place_random(input, &blocks, rng)?;
            Ok(LayoutPlan {
                mode,
                font_shrink: 0,
                sections: Vec::new(),
                placements,
                blocks,
            })
        }
    }
}

struct Pending {
    group: usize,
    pin: Option<Cell>,
    spilled: bool,
}

fn plan_grid(
    input: &LayoutInput<'_>,
    blocks: &[MeasuredGroup],
    respill: bool,
) -> Result<(Vec<VirtualGrid>, Vec<Placement>), LayoutError> {
    let s = input.structural;
    let groups = &input.doc.permutation.groups;
    let (rows, cols) = s.segment_size;
    let mut placements: Vec<Option<Placement>> = vec![None; groups.len()];
    let mut sections = Vec::new();
    let mut carry: Vec<Pending> = Vec::new();

    for sec in 0..s.num_segments {
        let mut queue: Vec<Pending> = groups
            .iter()
            .enumerate()
            .filter(|(_, g)| g.segment == sec)
            .map(|(i, g)| Pending {
                group: i,
                pin: g.grid_position,
                spilled: false,
            })
            .collect();
        queue.append(&mut carry);
        if queue.is_empty() {
            continue;
        }
        let rect = section_rect(s, sec);
        let (assignment, sizing) = loop {
            let list: Vec<(usize, Option<Cell>)> = queue.iter().map(|p| (p.group, p.pin)).collect();
            let mut a = assign_cells(sec, &list, rows, cols)?;
            for g in std::mem::take(&mut a.overflow) {
                let pos = queue.iter().position(|p| p.group == g).expect("queued");
                let mut p = queue.remove(pos);
                p.spilled = true;
                carry.push(p);
            }
            let size_of = |g: usize| (blocks[g].width, blocks[g].height);
            match size_grid(&a.cells, size_of, rows, cols, rect, s.inter_group_y_offset) {
                Ok(sizing) => break (a, sizing),
                Err(_) if respill => {
                    // Move the last unpinned group in fill order onward.
                    let victim = a
                        .cells
                        .values()
                        .rev()
                        .copied()
                        .find(|g| queue.iter().any(|p| p.group == *g && p.pin.is_none()));
                    let Some(g) = victim else {
                        return Err(LayoutError::Overflow { section: sec });
                    };
                    let pos = queue.iter().position(|p| p.group == g).expect("queued");
                    let mut p = queue.remove(pos);
                    p.spilled = true;
                    carry.push(p);
                }
                Err(_) => return Err(LayoutError::Overflow { section: sec }),
            }
        };
        for (&cell, &g) in &assignment.cells {
            let b = &blocks[g];
            let spilled = queue.iter().any(|p| p.group == g && p.spilled);
            placements[g] = Some(Placement {
                group: groups[g].name.clone(),
                section: Some(sec),
                cell: Some(cell),
                rect: place_in_cell(sizing.cell_rect(cell), b.width, b.height, groups[g].alignment),
                spilled,
            });
        }
        sections.push(VirtualGrid {
            section: sec,
            rect,
            rows,
            cols,
            cells: assignment
                .cells
                .iter()
                .map(|(&(row, col), &group)| CellEntry { row, col, group })
                .collect(),
            row_heights: sizing.row_heights,
            col_widths: sizing.col_widths,
        });
    }
    if !carry.is_empty() {
        return Err(LayoutError::Overflow {
            section: s.num_segments.saturating_sub(1),
        });
    }
    let placements = placements
        .into_iter()
        .enumerate()
        .map(|(i, p)| {
            p.ok_or_else(|| LayoutError::Placement {
                group: groups[i].name.clone(),
            })
        })
        .collect::<Result<_, _>>()?;
    Ok((sections, placements))
}
