//! Serde mirror of the JSON schema file, before defaults are applied.

use std::collections::BTreeMap;

use serde::{Deserialize, Deserializer, Serialize};

use super::{
    Alignment, Color, CommonConfig, EntityDef, EntityGroupDef, FontVariance, PatternGroups,
    RowSpec, SchemaError, SeparatorStyle, StochasticSchema, StructuralConfig, TabType,
    TableStyleConfig, TabulateSpec, TranslationConfig, ValueConstraints,
};

pub(super) const DEFAULT_LOCALE: &str = "en";
pub(super) const DEFAULT_GENERATOR: &str = "default";
const DEFAULT_HEADER_PROBABILITY: f64 = 0.5;
const DEFAULT_FONT_SIZE: (u32, u32) = (12, 18);
const CURRENCY_PATTERN: &str = "currency";

pub(super) fn from_json(text: &str) -> Result<(RawSchema, Vec<String>), SchemaError> {
    let mut unknown = Vec::new();
    let mut json = serde_json::Deserializer::from_str(text);
    let raw = {
        let mut record = |path: serde_ignored::Path<'_>| unknown.push(path.to_string());
        let tracked = serde_ignored::Deserializer::new(&mut json, &mut record);
        serde_path_to_error::deserialize::<_, RawSchema>(tracked).map_err(|err| {
            let path = err.path().to_string();
            let inner = err.into_inner();
            json_error(inner, Some(path))
        })?
    };
    json.end().map_err(|e| json_error(e, None))?;
    Ok((raw, unknown))
}

fn json_error(err: serde_json::Error, path: Option<String>) -> SchemaError {
    use serde_json::error::Category;
    match err.classify() {
        Category::Syntax | Category::Eof | Category::Io => SchemaError::Syntax {
            line: err.line(),
            column: err.column(),
            message: err.to_string(),
        },
        Category::Data => SchemaError::Invalid {
            path: path.unwrap_or_else(|| ".".to_string()),
            message: err.to_string(),
        },
    }
}

fn bool_like<'de, D: Deserializer<'de>>(deserializer: D) -> Result<bool, D::Error> {
    #[derive(Deserialize)]
    #[serde(untagged)]
    enum Repr {
        Bool(bool),
        Text(String),
    }
    match Repr::deserialize(deserializer)? {
        Repr::Bool(b) => Ok(b),
        Repr::Text(t) => match t.to_ascii_lowercase().as_str() {
            "true" | "yes" | "1" => Ok(true),
            "false" | "no" | "0" | "" => Ok(false),
            _ => Err(serde::de::Error::custom(format!("`{t}` is not a boolean"))),
        },
    }
}

#[derive(Debug, Serialize, Deserialize)]
pub(super) struct RawSchema {
    #[serde(default, alias = "doc_type_name", skip_serializing_if = "Option::is_none")]
    doc_type: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    faker_locale: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    translation: Option<RawTranslation>,
    #[serde(
        default,
        rename = "fake_value_generator_class",
        skip_serializing_if = "Option::is_none"
    )]
    generator_key: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    structural_config: Option<RawStructural>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    font_colors: Option<Vec<Color>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    font_size: Option<RawPair>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    font_dir: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    canvas_color_options: Option<Vec<Color>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    table_config: Option<RawTableConfig>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    show_entity_headers_probability: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    consistent_patterns_for_values: Option<RawPatterns>,
    expected_keys: Vec<String>,
    entity_groups: Vec<RawGroup>,
}

#[derive(Debug, Serialize, Deserialize)]
struct RawTranslation {
    #[serde(deserialize_with = "bool_like")]
    enable: bool,
    #[serde(default)]
    target_lang_code: String,
}

/// `[a, b]` or `{"min": a, "max": b}` / `{"rows": a, "cols": b}`.
#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
#[serde(untagged)]
enum RawPair {
    List([u32; 2]),
    MinMax { min: u32, max: u32 },
    RowsCols { rows: u32, cols: u32 },
}

impl RawPair {
    fn get(self) -> (u32, u32) {
        match self {
            RawPair::List([a, b]) | RawPair::MinMax { min: a, max: b } => (a, b),
            RawPair::RowsCols { rows, cols } => (rows, cols),
        }
    }
}

#[derive(Debug, Default, Serialize, Deserialize)]
struct RawStructural {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    num_segments: Option<u32>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    segment_size: Option<RawPair>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    canvas_width: Option<u32>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    canvas_height: Option<u32>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    intra_group_y_offset: Option<u32>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    intra_group_x_offset: Option<u32>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    inter_group_y_offset: Option<u32>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    space_width_weight: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    page_margin: Option<u32>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    min_rows: Option<u32>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    max_rows: Option<u32>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    min_empty_rows: Option<u32>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    max_empty_rows: Option<u32>,
}

#[derive(Debug, Default, Serialize, Deserialize)]
struct RawTableConfig {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    header_font_faces: Option<Vec<String>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    header_font_colors: Option<Vec<Color>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    row_font_faces: Option<Vec<String>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    row_font_colors: Option<Vec<Color>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    separator_styles: Option<Vec<SeparatorStyle>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    cell_padding: Option<u32>,
}

/// A flat token list (the currency pattern), a list of lists, or named lists.
#[derive(Debug, Serialize, Deserialize)]
#[serde(untagged)]
enum RawPatterns {
    Flat(Vec<String>),
    Nested(Vec<Vec<String>>),
    Named(BTreeMap<String, Vec<String>>),
}

impl RawPatterns {
    fn resolve(self) -> PatternGroups {
        match self {
            RawPatterns::Flat(tokens) if tokens.is_empty() => PatternGroups::default(),
            RawPatterns::Flat(tokens) => PatternGroups(vec![(CURRENCY_PATTERN.into(), tokens)]),
            RawPatterns::Nested(lists) => PatternGroups(
                lists
                    .into_iter()
                    .enumerate()
                    .map(|(i, tokens)| {
                        let name = if i == 0 {
                            CURRENCY_PATTERN.to_string()
                        } else {
                            format!("pattern_{i}")
                        };
                        (name, tokens)
                    })
                    .collect(),
            ),
            RawPatterns::Named(map) => PatternGroups(map.into_iter().collect()),
        }
    }
}

#[derive(Debug, Serialize, Deserialize)]
struct RawGroup {
    name: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    segment: Option<BTreeMap<String, f64>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    tabulate: Option<RawTabulate>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    header: Option<Vec<String>>,
    #[serde(
        default,
        rename = "headerProbability",
        skip_serializing_if = "Option::is_none"
    )]
    header_probability: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    probability: Option<f64>,
    #[serde(default, rename = "gridPosition", skip_serializing_if = "Option::is_none")]
    grid_position: Option<RawGridPosition>,
    #[serde(
        default,
        rename = "groupAlignment",
        skip_serializing_if = "Option::is_none"
    )]
    group_alignment: Option<Vec<Alignment>>,
    entities: Vec<RawEntity>,
    #[serde(
        default,
        rename = "entityShuffleGroups",
        skip_serializing_if = "Option::is_none"
    )]
    entity_shuffle_groups: Option<Vec<Vec<String>>>,
}

#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
#[serde(untagged)]
enum RawGridPosition {
    List([u32; 2]),
    Named { row: u32, col: u32 },
}

#[derive(Debug, Serialize, Deserialize)]
struct RawTabulate {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    create: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    rows: Option<RowSpec>,
    #[serde(default, rename = "numEmptyRows", skip_serializing_if = "Option::is_none")]
    num_empty_rows: Option<RowSpec>,
    #[serde(default, rename = "tabType", skip_serializing_if = "Option::is_none")]
    tab_type: Option<Vec<TabType>>,
}

#[derive(Debug, Serialize, Deserialize)]
struct RawEntity {
    name: String,
    #[serde(rename = "type")]
    entity_type: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    probability: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    header: Option<Vec<String>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    align: Option<Vec<Alignment>>,
    #[serde(default, alias = "headerAlign", skip_serializing_if = "Option::is_none")]
    header_align: Option<Vec<Alignment>>,
    #[serde(default, rename = "fontVariance", skip_serializing_if = "Option::is_none")]
    font_variance: Option<FontVariance>,
    #[serde(default, rename = "addHeader", skip_serializing_if = "Option::is_none")]
    add_header: Option<bool>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    format: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    constraints: Option<ValueConstraints>,
}

fn or_left(aligns: Option<Vec<Alignment>>) -> Vec<Alignment> {
    aligns.unwrap_or_else(|| vec![Alignment::Left])
}

impl RawSchema {
    pub(super) fn resolve(self) -> Result<StochasticSchema, SchemaError> {
        let s = self.structural_config.unwrap_or_default();
        let d = StructuralConfig::default();
        let structural = StructuralConfig {
            num_segments: s.num_segments.unwrap_or(d.num_segments),
            segment_size: s.segment_size.map(RawPair::get).unwrap_or(d.segment_size),
            canvas_width: s.canvas_width.unwrap_or(d.canvas_width),
            canvas_height: s.canvas_height.unwrap_or(d.canvas_height),
            intra_group_y_offset: s.intra_group_y_offset.unwrap_or(d.intra_group_y_offset),
            intra_group_x_offset: s.intra_group_x_offset.unwrap_or(d.intra_group_x_offset),
            inter_group_y_offset: s.inter_group_y_offset.unwrap_or(d.inter_group_y_offset),
            space_width_weight: s.space_width_weight.unwrap_or(d.space_width_weight),
            page_margin: s.page_margin.unwrap_or(d.page_margin),
            min_rows: s.min_rows.unwrap_or(d.min_rows),
            max_rows: s.max_rows.unwrap_or(d.max_rows),
            min_empty_rows: s.min_empty_rows.unwrap_or(d.min_empty_rows),
            max_empty_rows: s.max_empty_rows.unwrap_or(d.max_empty_rows),
        };

        let t = self.table_config.unwrap_or_default();
        let td = TableStyleConfig::default();
        let table_config = TableStyleConfig {
            header_font_faces: t.header_font_faces.unwrap_or(td.header_font_faces),
            header_font_colors: t.header_font_colors.unwrap_or(td.header_font_colors),
            row_font_faces: t.row_font_faces.unwrap_or(td.row_font_faces),
            row_font_colors: t.row_font_colors.unwrap_or(td.row_font_colors),
            separator_styles: t.separator_styles.unwrap_or(td.separator_styles),
            cell_padding: t.cell_padding.unwrap_or(td.cell_padding),
        };

        let show_headers = self
            .show_entity_headers_probability
            .unwrap_or(DEFAULT_HEADER_PROBABILITY);

        let common = CommonConfig {
            faker_locale: self.faker_locale.unwrap_or_else(|| DEFAULT_LOCALE.into()),
            translation: self
                .translation
                .map(|t| TranslationConfig {
                    enable: t.enable,
                    target_lang_code: t.target_lang_code,
                })
                .unwrap_or_default(),
            generator_key: self
                .generator_key
                .unwrap_or_else(|| DEFAULT_GENERATOR.into()),
            structural,
            font_colors: self.font_colors.unwrap_or_else(|| vec![Color::BLACK]),
            font_size: self.font_size.map(RawPair::get).unwrap_or(DEFAULT_FONT_SIZE),
            font_dir: self.font_dir,
            canvas_color_options: self
                .canvas_color_options
                .unwrap_or_else(|| vec![Color::WHITE]),
            table_config,
            show_entity_headers_probability: show_headers,
            consistent_patterns_for_values: self
                .consistent_patterns_for_values
                .map(RawPatterns::resolve)
                .unwrap_or_default(),
            expected_keys: self.expected_keys,
        };

        let entity_groups = self
            .entity_groups
            .into_iter()
            .enumerate()
            .map(|(gi, g)| g.resolve(gi, show_headers))
            .collect::<Result<Vec<_>, _>>()?;

        Ok(StochasticSchema {
            doc_type_name: self.doc_type.unwrap_or_else(|| "document".into()),
            common,
            entity_groups,
        })
    }

    pub(super) fn from_schema(schema: &StochasticSchema) -> RawSchema {
        let c = &schema.common;
        let s = &c.structural;
        let t = &c.table_config;
        RawSchema {
            doc_type: Some(schema.doc_type_name.clone()),
            faker_locale: Some(c.faker_locale.clone()),
            translation: Some(RawTranslation {
                enable: c.translation.enable,
                target_lang_code: c.translation.target_lang_code.clone(),
            }),
            generator_key: Some(c.generator_key.clone()),
            structural_config: Some(RawStructural {
                num_segments: Some(s.num_segments),
                segment_size: Some(RawPair::List([s.segment_size.0, s.segment_size.1])),
                canvas_width: Some(s.canvas_width),
                canvas_height: Some(s.canvas_height),
                intra_group_y_offset: Some(s.intra_group_y_offset),
                intra_group_x_offset: Some(s.intra_group_x_offset),
                inter_group_y_offset: Some(s.inter_group_y_offset),
                space_width_weight: Some(s.space_width_weight),
                page_margin: Some(s.page_margin),
                min_rows: Some(s.min_rows),
                max_rows: Some(s.max_rows),
                min_empty_rows: Some(s.min_empty_rows),
                max_empty_rows: Some(s.max_empty_rows),
            }),
            font_colors: Some(c.font_colors.clone()),
            font_size: Some(RawPair::List([c.font_size.0, c.font_size.1])),
            font_dir: c.font_dir.clone(),
            canvas_color_options: Some(c.canvas_color_options.clone()),
            table_config: Some(RawTableConfig {
                header_font_faces: Some(t.header_font_faces.clone()),
                header_font_colors: Some(t.header_font_colors.clone()),
                row_font_faces: Some(t.row_font_faces.clone()),
                row_font_colors: Some(t.row_font_colors.clone()),
                separator_styles: Some(t.separator_styles.clone()),
                cell_padding: Some(t.cell_padding),
            }),
            show_entity_headers_probability: Some(c.show_entity_headers_probability),
            consistent_patterns_for_values: Some(RawPatterns::Named(
                c.consistent_patterns_for_values.0.iter().cloned().collect(),
            )),
            expected_keys: c.expected_keys.clone(),
            entity_groups: schema.entity_groups.iter().map(RawGroup::from_def).collect(),
        }
    }
}

impl RawGroup {
    fn resolve(self, index: usize, show_headers: f64) -> Result<EntityGroupDef, SchemaError> {
        let segment_dist = match self.segment {
            None => BTreeMap::from([(0, 1.0)]),
            Some(map) => map
                .into_iter()
                .map(|(key, p)| {
                    key.trim().parse::<u32>().map(|id| (id, p)).map_err(|_| {
                        SchemaError::Invalid {
                            path: format!("entity_groups[{index}].segment.{key}"),
                            message: "segment ids must be non-negative integers".into(),
                        }
                    })
                })
                .collect::<Result<_, _>>()?,
        };
        let tabulate = match self.tabulate {
            None => TabulateSpec::default(),
            Some(t) => {
                let d = TabulateSpec::default();
                TabulateSpec {
                    create_prob: t.create.unwrap_or(d.create_prob),
                    rows: t.rows.unwrap_or(d.rows),
                    num_empty_rows: t.num_empty_rows.unwrap_or(d.num_empty_rows),
                    tab_types: t.tab_type.unwrap_or(d.tab_types),
                }
            }
        };
        let entities = self
            .entities
            .into_iter()
            .map(|e| EntityDef {
                name: e.name,
                entity_type: e.entity_type,
                presence_probability: e.probability.unwrap_or(1.0),
                headers: e.header.unwrap_or_default(),
                align: or_left(e.align),
                header_align: or_left(e.header_align),
                font_variance: e.font_variance,
                add_header: e.add_header,
                format: e.format,
                constraints: e.constraints.unwrap_or_default(),
            })
            .collect();
        Ok(EntityGroupDef {
            name: self.name,
            segment_dist,
            tabulate,
            headers: self.header.unwrap_or_default(),
            header_probability: self.header_probability.unwrap_or(show_headers),
            presence_probability: self.probability.unwrap_or(1.0),
            grid_position: self.grid_position.map(|p| match p {
                RawGridPosition::List([r, c]) | RawGridPosition::Named { row: r, col: c } => {
                    (r, c)
                }
            }),
            group_alignment: or_left(self.group_alignment),
            entities,
            entity_shuffle_groups: self.entity_shuffle_groups.unwrap_or_default(),
        })
    }

    fn from_def(g: &EntityGroupDef) -> RawGroup {
        RawGroup {
            name: g.name.clone(),
            segment: Some(
                g.segment_dist
                    .iter()
                    .map(|(k, p)| (k.to_string(), *p))
                    .collect(),
            ),
            tabulate: Some(RawTabulate {
                create: Some(g.tabulate.create_prob),
                rows: Some(g.tabulate.rows),
                num_empty_rows: Some(g.tabulate.num_empty_rows),
                tab_type: Some(g.tabulate.tab_types.clone()),
            }),
            header: Some(g.headers.clone()),
            header_probability: Some(g.header_probability),
            probability: Some(g.presence_probability),
            grid_position: g.grid_position.map(|(r, c)| RawGridPosition::List([r, c])),
            group_alignment: Some(g.group_alignment.clone()),
            entities: g
                .entities
                .iter()
                .map(|e| RawEntity {
                    name: e.name.clone(),
                    entity_type: e.entity_type.clone(),
                    probability: Some(e.presence_probability),
                    header: Some(e.headers.clone()),
                    align: Some(e.align.clone()),
                    header_align: Some(e.header_align.clone()),
                    font_variance: e.font_variance.clone(),
                    add_header: e.add_header,
                    format: e.format.clone(),
                    constraints: (!e.constraints.is_empty()).then(|| e.constraints.clone()),
                })
                .collect(),
            entity_shuffle_groups: Some(g.entity_shuffle_groups.clone()),
        }
    }
}
