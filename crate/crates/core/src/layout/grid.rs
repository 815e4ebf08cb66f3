//! Per-section virtual grids: cell assignment and content-driven sizing.

use std::collections::BTreeMap;

use crate::geometry::Rect;
use crate::schema::Alignment;

use super::LayoutError;

pub type Cell = (u32, u32);

#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct CellAssignment {
    pub cells: BTreeMap<Cell, usize>,
    /// Groups that found no free cell, in input order.
    pub overflow: Vec<usize>,
}

/// Pinned groups take their cells first; the rest fill free cells in
/// row-major order, following the input order.
pub fn assign_cells(
    section: u32,
    groups: &[(usize, Option<Cell>)],
    rows: u32,
    cols: u32,
) -> Result<CellAssignment, LayoutError> {
    let mut out = CellAssignment::default();
    for &(g, pin) in groups {
        let Some((r, c)) = pin else { continue };
        if r >= rows || c >= cols {
            return Err(LayoutError::PinOutsideGrid { section, cell: (r, c) });
        }
        if out.cells.insert((r, c), g).is_some() {
            return Err(LayoutError::PinConflict { section, cell: (r, c) });
        }
    }
    let mut free = (0..rows)
        .flat_map(|r| (0..cols).map(move |c| (r, c)))
        .filter(|cell| !out.cells.contains_key(cell))
        .collect::<Vec<_>>()
        .into_iter();
    for &(g, pin) in groups {
        if pin.is_some() {
            continue;
        }
        match free.next() {
            Some(cell) => {
                out.cells.insert(cell, g);
            }
            None => out.overflow.push(g),
        }
    }
    Ok(out)
}

/// Concrete track sizes for one grid, in canvas coordinates.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct GridSizing {
    pub row_heights: Vec<u32>,
    /// Widest group per column.
    pub col_widths: Vec<u32>,
    /// Column width plus its share of the horizontal slack.
    pub lane_widths: Vec<u32>,
    pub row_offsets: Vec<u32>,
    pub col_offsets: Vec<u32>,
}

impl GridSizing {
    pub fn cell_rect(&self, (r, c): Cell) -> Rect {
        Rect::new(
            self.col_offsets[c as usize],
            self.row_offsets[r as usize],
            self.lane_widths[c as usize],
            self.row_heights[r as usize],
        )
    }
}

/// Content does not fit the section even with zero gaps.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct SizeOverflow {
    pub needed_w: u32,
    pub needed_h: u32,
}

fn track_offsets(sizes: &[u32], start: u32, gap: u32) -> Vec<u32> {
    let mut pos = start;
    let mut out = Vec::with_capacity(sizes.len());
    let last_nonempty = sizes.iter().rposition(|&s| s > 0);
    for (i, &s) in sizes.iter().enumerate() {
        out.push(pos);
        if s > 0 {
            pos += s;
            if Some(i) != last_nonempty {
                pos += gap;
            }
        }
    }
    out
}

/// Largest gap not above `gap` that lets `content` plus `n - 1` gaps fit `extent`.
fn fitted_gap(content: u32, nonempty: u32, extent: u32, gap: u32) -> u32 {
    if nonempty <= 1 {
        return gap;
    }
    let spare = extent - content;
    gap.min(spare / (nonempty - 1))
}

/// Rows take the tallest group, columns the widest; empty tracks collapse to
/// zero. Gaps shrink before content overflows. Horizontal slack widens the
/// lanes of non-empty columns evenly; vertical slack stays below the last row.
pub fn size_grid(
    cells: &BTreeMap<Cell, usize>,
    size_of: impl Fn(usize) -> (u32, u32),
    rows: u32,
    cols: u32,
    section: Rect,
    gap: u32,
) -> Result<GridSizing, SizeOverflow> {
    let mut row_heights = vec![0u32; rows as usize];
    let mut col_widths = vec![0u32; cols as usize];
    for (&(r, c), &g) in cells {
        let (w, h) = size_of(g);
        // An empty measurement still occupies its track.
        row_heights[r as usize] = row_heights[r as usize].max(h.max(1));
        col_widths[c as usize] = col_widths[c as usize].max(w.max(1));
    }
    let need_h: u32 = row_heights.iter().sum();
    let need_w: u32 = col_widths.iter().sum();
    if need_h > section.h || need_w > section.w {
        return Err(SizeOverflow {
            needed_w: need_w,
            needed_h: need_h,
        });
    }
    let filled_rows = row_heights.iter().filter(|&&h| h > 0).count() as u32;
    let filled_cols = col_widths.iter().filter(|&&w| w > 0).count() as u32;
    let row_gap = fitted_gap(need_h, filled_rows, section.h, gap);
    let col_gap = fitted_gap(need_w, filled_cols, section.w, gap);
    let used_w = need_w + col_gap * filled_cols.saturating_sub(1);
    let extra = (section.w - used_w).checked_div(filled_cols).unwrap_or(0);
    let lane_widths: Vec<u32> = col_widths
        .iter()
        .map(|&w| if w > 0 { w + extra } else { 0 })
        .collect();
    Ok(GridSizing {
        row_offsets: track_offsets(&row_heights, section.y, row_gap),
        col_offsets: track_offsets(&lane_widths, section.x, col_gap),
        row_heights,
        col_widths,
        lane_widths,
    })
}

/// Places a `w x h` group inside `cell`: horizontally per `align`, top-aligned.
pub fn place_in_cell(cell: Rect, w: u32, h: u32, align: Alignment) -> Rect {
    let slack = cell.w.saturating_sub(w);
    let dx = match align {
        Alignment::Left => 0,
        Alignment::Center => slack / 2,
        Alignment::Right => slack,
    };
    Rect::new(cell.x + dx, cell.y, w, h)
}
