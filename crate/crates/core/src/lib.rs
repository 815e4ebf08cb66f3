//! Synthetic semi-structured document generation.
//!
//! A single stochastic schema describes entity groups, their entities, and the
//! probabilities and option lists governing every visual and structural
//! attribute. Generation runs per document:
//!
//! 1. [`sampling::freeze_permutation`] freezes every stochastic attribute into a
//!    value-free [`sampling::DocumentPermutation`].
//! 2. [`values::instantiate`] fills the permutation with locale-aware fake values
//!    and (optionally) translated headers.
//! 3. [`layout::plan_layout`] places entity groups on per-section virtual grids
//!    (or randomly, for the ablation baseline).
//! 4. [`render::render_document`] rasterizes the page and records word boxes.
//! 5. [`annotate`] turns rendered entities into annotation, IOB, and KIE files.
//!
//! [`pipeline`] wires the stages together with retries and a batch manifest;
//! [`diversity`] computes the mean pairwise cosine similarity of a dataset.

pub mod annotate;
pub mod diversity;
pub mod fixtures;
pub mod geometry;
pub mod layout;
pub mod pipeline;
pub mod render;
pub mod sampling;
pub mod schema;
pub mod values;

pub use geometry::Rect;
pub use schema::{parse_schema, validate_schema, ParseOptions, StochasticSchema};
