//! Parameterized sampling: freezes a stochastic schema into a document
//! permutation, a value-free outline in which every random attribute is
//! concrete.

mod rng;

use std::collections::{BTreeMap, BTreeSet};

use rand::seq::SliceRandom;
use rand::Rng;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use thiserror::Error;

pub use rng::{DocRng, RandomSource, DOMAIN_FREEZE, DOMAIN_LAYOUT, DOMAIN_VALUES};

use crate::schema::{
    normalize_segment_dist, Alignment, Color, CommonConfig, RowSpec, SchemaError,
    SeparatorStyle, StochasticSchema, TabType, TableStyleConfig, TabulateSpec, DEFAULT_FACE,
};

/// Freezes yielding zero groups are redrawn this many times before giving up.
pub const MAX_EMPTY_PERMUTATION_RETRIES: u32 = 10;

#[derive(Debug, Error)]
pub enum SamplingError {
    #[error("cannot sample from an empty distribution")]
    EmptyDistribution,
    #[error("cannot choose from an empty option list")]
    EmptyOptions,
    #[error("entity `{0}` belongs to more than one shuffle subgroup")]
    OverlappingSubgroups(String),
    #[error("no font faces available")]
    EmptyFontLibrary,
    #[error("no entity group was present after {0} attempts")]
    NoGroupsPresent(u32),
    #[error(transparent)]
    Schema(#[from] SchemaError),
}

/// A concrete font: face name, pixel size, and colour.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct FontSpec {
    pub face: String,
    pub size: u32,
    pub color: Color,
}

/// Document-wide visual choices.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct StyleChoice {
    pub canvas_color: Color,
    pub group_header: FontSpec,
    pub entity_header: FontSpec,
    pub entity_value: FontSpec,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct TableStyle {
    pub header_font: FontSpec,
    pub row_font: FontSpec,
    pub separator: SeparatorStyle,
    pub cell_padding: u32,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct TableLayout {
    pub orientation: TabType,
    pub row_count: u32,
    pub empty_row_count: u32,
    pub style: TableStyle,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "mode", rename_all = "lowercase")]
pub enum LayoutMode {
    Stacked,
    Table(TableLayout),
}

impl LayoutMode {
    /// Number of value rows each entity needs.
    pub fn value_rows(&self) -> u32 {
        match self {
            LayoutMode::Stacked => 1,
            LayoutMode::Table(t) => t.row_count,
        }
    }
}

/// Outcome of the tabulation draw, before a table style is attached.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum TableDecision {
    Stacked,
    Table {
        orientation: TabType,
        row_count: u32,
        empty_row_count: u32,
    },
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct FrozenEntity {
    pub name: String,
    pub entity_type: String,
    /// Index into the schema group's entity list.
    pub schema_index: usize,
    pub header: Option<String>,
    pub alignment: Alignment,
    pub header_alignment: Alignment,
    pub font: FontSpec,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct FrozenGroup {
    pub name: String,
    /// Index into the schema's group list.
    pub schema_index: usize,
    pub segment: u32,
    pub header: Option<String>,
    pub layout_mode: LayoutMode,
    pub grid_position: Option<(u32, u32)>,
    pub alignment: Alignment,
    pub entities: Vec<FrozenEntity>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct DocumentPermutation {
    pub doc_type: String,
    pub groups: Vec<FrozenGroup>,
    pub style: StyleChoice,
    /// Outcome of the single document-wide entity header draw.
    pub show_entity_headers: bool,
}

impl DocumentPermutation {
    /// Hex SHA-256 of the canonical JSON of the frozen group list.
    pub fn fingerprint(&self) -> String {
        let canonical = serde_json::to_vec(&self.groups).expect("groups serialize");
        hex::encode(Sha256::digest(&canonical))
    }
}

/// True iff a uniform draw in `[0, 1)` falls below `p`.
pub fn sample_presence<R: Rng + ?Sized>(p: f64, rng: &mut R) -> bool {
    rng.random::<f64>() < p
}

/// Inverse-CDF draw over the distribution's key order.
pub fn sample_from_distribution<K: Copy + Ord, R: Rng + ?Sized>(
    dist: &BTreeMap<K, f64>,
    rng: &mut R,
) -> Result<K, SamplingError> {
    let total: f64 = dist.values().sum();
    let last = *dist.keys().next_back().ok_or(SamplingError::EmptyDistribution)?;
    let u = rng.random::<f64>() * total;
    let mut cumulative = 0.0;
    for (&key, &p) in dist {
        cumulative += p;
        if u < cumulative {
            return Ok(key);
        }
    }
    Ok(last)
}

pub fn sample_uniform_choice<'a, T, R: Rng + ?Sized>(
    options: &'a [T],
    rng: &mut R,
) -> Result<&'a T, SamplingError> {
    if options.is_empty() {
        return Err(SamplingError::EmptyOptions);
    }
    Ok(&options[rng.random_range(0..options.len())])
}

fn sample_count<R: Rng + ?Sized>(spec: RowSpec, bounds: (u32, u32), rng: &mut R) -> u32 {
    match spec {
        RowSpec::Fixed(n) => n,
        RowSpec::Random => rng.random_range(bounds.0..=bounds.1.max(bounds.0)),
    }
}

/// Stacked with probability `1 - create_prob`, otherwise a table whose
/// orientation is uniform over `tab_types`.
pub fn sample_table_layout<R: Rng + ?Sized>(
    spec: &TabulateSpec,
    row_bounds: (u32, u32),
    empty_row_bounds: (u32, u32),
    rng: &mut R,
) -> Result<TableDecision, SamplingError> {
    if !sample_presence(spec.create_prob, rng) {
        return Ok(TableDecision::Stacked);
    }
    let orientation = *sample_uniform_choice(&spec.tab_types, rng)?;
    let row_count = sample_count(spec.rows, row_bounds, rng).max(1);
    let empty_row_count = sample_count(spec.num_empty_rows, empty_row_bounds, rng);
    Ok(TableDecision::Table {
        orientation,
        row_count,
        empty_row_count,
    })
}

/// Permutes members of each subgroup among the subgroup's own positions.
/// Subgroup names missing from `items` are skipped; everything outside the
/// subgroups keeps its index.
pub fn apply_shuffle_groups<T, R, F>(
    items: Vec<T>,
    name_of: F,
    shuffle_groups: &[Vec<String>],
    rng: &mut R,
) -> Result<Vec<T>, SamplingError>
where
    R: Rng + ?Sized,
    F: Fn(&T) -> &str,
{
    let mut seen = BTreeSet::new();
    for name in shuffle_groups.iter().flatten() {
        if !seen.insert(name.as_str()) {
            return Err(SamplingError::OverlappingSubgroups(name.clone()));
        }
    }
    let mut slots: Vec<Option<T>> = items.into_iter().map(Some).collect();
    for subgroup in shuffle_groups {
        let positions: Vec<usize> = slots
            .iter()
            .enumerate()
            .filter(|(_, item)| {
                item.as_ref()
                    .is_some_and(|it| subgroup.iter().any(|n| n == name_of(it)))
            })
            .map(|(i, _)| i)
            .collect();
        let mut targets = positions.clone();
        targets.shuffle(rng);
        let members: Vec<T> = positions
            .iter()
            .map(|&i| slots[i].take().expect("position collected from a filled slot"))
            .collect();
        for (member, target) in members.into_iter().zip(targets) {
            slots[target] = Some(member);
        }
    }
    Ok(slots
        .into_iter()
        .map(|s| s.expect("every slot refilled"))
        .collect())
}

/// Canvas colour, per-role fonts, and sizes for one document.
pub fn sample_global_style<R: Rng + ?Sized>(
    common: &CommonConfig,
    faces: &[String],
    rng: &mut R,
) -> Result<StyleChoice, SamplingError> {
    if faces.is_empty() {
        return Err(SamplingError::EmptyFontLibrary);
    }
    let (min, max) = common.font_size;
    let canvas_color = *sample_uniform_choice(&common.canvas_color_options, rng)?;
    let color = *sample_uniform_choice(&common.font_colors, rng)?;
    let value_size = rng.random_range(min..=max);
    let entity_header_size = rng.random_range(min..=max);
    let group_header_size = rng.random_range(value_size..=max);
    let font = |size: u32, rng: &mut R| -> Result<FontSpec, SamplingError> {
        Ok(FontSpec {
            face: sample_uniform_choice(faces, rng)?.clone(),
            size,
            color,
        })
    };
    let entity_value = font(value_size, rng)?;
    let entity_header = font(entity_header_size, rng)?;
    let group_header = font(group_header_size, rng)?;
    Ok(StyleChoice {
        canvas_color,
        group_header,
        entity_header,
        entity_value,
    })
}

/// Per-table style; `"default"` faces inherit the document's role faces.
pub fn sample_table_style<R: Rng + ?Sized>(
    config: &TableStyleConfig,
    style: &StyleChoice,
    rng: &mut R,
) -> Result<TableStyle, SamplingError> {
    let pick_face = |face: &String, inherit: &FontSpec| {
        if face == DEFAULT_FACE {
            inherit.face.clone()
        } else {
            face.clone()
        }
    };
    let header_face = pick_face(sample_uniform_choice(&config.header_font_faces, rng)?, &style.entity_header);
    let header_color = *sample_uniform_choice(&config.header_font_colors, rng)?;
    let row_face = pick_face(sample_uniform_choice(&config.row_font_faces, rng)?, &style.entity_value);
    let row_color = *sample_uniform_choice(&config.row_font_colors, rng)?;
    let separator = *sample_uniform_choice(&config.separator_styles, rng)?;
    Ok(TableStyle {
        header_font: FontSpec {
            face: header_face,
            size: style.entity_header.size,
            color: header_color,
        },
        row_font: FontSpec {
            face: row_face,
            size: style.entity_value.size,
            color: row_color,
        },
        separator,
        cell_padding: config.cell_padding,
    })
}

struct Draft {
    schema_index: usize,
    segment: u32,
    decision: TableDecision,
    header: Option<String>,
    entities: Vec<usize>,
}

/// Samples every stochastic attribute of `schema` in a fixed order: group
/// presence, segment, tabulation, group header, entity presence, the global
/// entity-header draw, entity headers, alignments, subgroup shuffles, style.
pub fn freeze_permutation<R: Rng + ?Sized>(
    schema: &StochasticSchema,
    faces: &[String],
    rng: &mut R,
) -> Result<DocumentPermutation, SamplingError> {
    let common = &schema.common;
    let s = &common.structural;
    let segment_dists = schema
        .entity_groups
        .iter()
        .map(|g| normalize_segment_dist(&g.segment_dist))
        .collect::<Result<Vec<_>, _>>()?;

    let mut drafts = Vec::new();
    for _ in 0..MAX_EMPTY_PERMUTATION_RETRIES {
        drafts.clear();
        for (gi, g) in schema.entity_groups.iter().enumerate() {
            if !sample_presence(g.presence_probability, rng) {
                continue;
            }
            let segment = sample_from_distribution(&segment_dists[gi], rng)?;
            let decision = sample_table_layout(
                &g.tabulate,
                (s.min_rows, s.max_rows),
                (s.min_empty_rows, s.max_empty_rows),
                rng,
            )?;
            let header = if sample_presence(g.header_probability, rng) && !g.headers.is_empty() {
                Some(sample_uniform_choice(&g.headers, rng)?.clone())
            } else {
                None
            };
            let entities: Vec<usize> = g
                .entities
                .iter()
                .enumerate()
                .filter(|(_, e)| sample_presence(e.presence_probability, rng))
                .map(|(i, _)| i)
                .collect();
            if entities.is_empty() {
                continue;
            }
            drafts.push(Draft {
                schema_index: gi,
                segment,
                decision,
                header,
                entities,
            });
        }
        if !drafts.is_empty() {
            break;
        }
    }
    if drafts.is_empty() {
        return Err(SamplingError::NoGroupsPresent(MAX_EMPTY_PERMUTATION_RETRIES));
    }

    let show_entity_headers = sample_presence(common.show_entity_headers_probability, rng);

    // Headers, alignments and shuffles; fonts are filled once the style exists.
    let placeholder = FontSpec {
        face: String::new(),
        size: 0,
        color: Color::BLACK,
    };
    let mut partial = Vec::with_capacity(drafts.len());
    for d in &drafts {
        let g = &schema.entity_groups[d.schema_index];
        let mut entities = Vec::with_capacity(d.entities.len());
        for &ei in &d.entities {
            let e = &g.entities[ei];
            let header = if (show_entity_headers || e.forces_header()) && !e.headers.is_empty() {
                Some(sample_uniform_choice(&e.headers, rng)?.clone())
            } else {
                None
            };
            entities.push(FrozenEntity {
                name: e.name.clone(),
                entity_type: e.entity_type.clone(),
                schema_index: ei,
                header,
                alignment: Alignment::Left,
                header_alignment: Alignment::Left,
                font: placeholder.clone(),
            });
        }
        let alignment = *sample_uniform_choice(&g.group_alignment, rng)?;
        for fe in &mut entities {
            let e = &g.entities[fe.schema_index];
            fe.alignment = *sample_uniform_choice(&e.align, rng)?;
            fe.header_alignment = *sample_uniform_choice(&e.header_align, rng)?;
        }
        let entities =
            apply_shuffle_groups(entities, |fe| fe.name.as_str(), &g.entity_shuffle_groups, rng)?;
        partial.push((alignment, entities));
    }

    let style = sample_global_style(common, faces, rng)?;
    let mut groups = Vec::with_capacity(drafts.len());
    for (d, (alignment, mut entities)) in drafts.into_iter().zip(partial) {
        let g = &schema.entity_groups[d.schema_index];
        let layout_mode = match d.decision {
            TableDecision::Stacked => LayoutMode::Stacked,
            TableDecision::Table {
                orientation,
                row_count,
                empty_row_count,
            } => LayoutMode::Table(TableLayout {
                orientation,
                row_count,
                empty_row_count,
                style: sample_table_style(&common.table_config, &style, rng)?,
            }),
        };
        for fe in &mut entities {
            let variance = g.entities[fe.schema_index].font_variance.as_ref();
            let base = &style.entity_value;
            fe.font = FontSpec {
                face: variance
                    .and_then(|v| v.face.clone())
                    .unwrap_or_else(|| base.face.clone()),
                size: variance.and_then(|v| v.size).unwrap_or(base.size),
                color: variance.and_then(|v| v.color).unwrap_or(base.color),
            };
        }
        groups.push(FrozenGroup {
            name: g.name.clone(),
            schema_index: d.schema_index,
            segment: d.segment,
            header: d.header,
            layout_mode,
            grid_position: g.grid_position,
            alignment,
            entities,
        });
    }

    Ok(DocumentPermutation {
        doc_type: schema.doc_type_name.clone(),
        groups,
        style,
        show_entity_headers,
    })
}
