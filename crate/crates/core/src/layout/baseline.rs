//! Random non-overlapping placement, used as the layout ablation.

use rand::{Rng, RngCore};

use super::{LayoutError, LayoutInput, MeasuredGroup, Placement, BASELINE_ATTEMPTS};
use crate::geometry::Rect;

pub(super) fn place_random(
    input: &LayoutInput<'_>,
    blocks: &[MeasuredGroup],
    rng: &mut dyn RngCore,
) -> Result<Vec<Placement>, LayoutError> {
    let s = input.structural;
    let m = s.page_margin;
    let (max_x, max_y) = (s.canvas_width.saturating_sub(m), s.canvas_height.saturating_sub(m));
    let mut placed: Vec<Placement> = Vec::with_capacity(blocks.len());
    for (g, b) in input.doc.permutation.groups.iter().zip(blocks) {
        let fail = || LayoutError::Placement { group: g.name.clone() };
        let (w, h) = (b.width.max(1), b.height.max(1));
        if m + w > max_x || m + h > max_y {
            return Err(fail());
        }
        let mut found = None;
        for _ in 0..BASELINE_ATTEMPTS {
            let x = rng.random_range(m..=max_x - w);
            let y = rng.random_range(m..=max_y - h);
            let r = Rect::new(x, y, w, h);
            if placed.iter().all(|p| p.rect.intersection_area(&r) == 0) {
                found = Some(r);
                break;
            }
        }
        placed.push(Placement {
            group: g.name.clone(),
            section: None,
            cell: None,
            rect: found.ok_or_else(fail)?,
            spilled: false,
        });
    }
    Ok(placed)
}
