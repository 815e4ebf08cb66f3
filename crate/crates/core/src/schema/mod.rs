//! Stochastic schema model, JSON parsing, and validation.
//!
//! The on-disk format is JSON whose key names follow the published entity
//! group listing (`entity_groups`, `segment`, `tabulate`, `headerProbability`,
//! `entityShuffleGroups`, ...). Parsing produces a fully resolved
//! [`StochasticSchema`]: every optional attribute has its default applied, so
//! downstream stages never consult fallbacks.

mod raw;
mod validate;

use std::collections::BTreeMap;
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Deserializer, Serialize, Serializer};
use sha2::{Digest, Sha256};
use thiserror::Error;

pub use validate::{validate_schema, Issue, ValidationReport};

/// Allowed deviation of a segment distribution's sum from 1.
pub const SEGMENT_SUM_TOLERANCE: f64 = 0.05;

#[derive(Debug, Error)]
pub enum SchemaError {
    #[error("syntax error at line {line}, column {column}: {message}")]
    Syntax {
        line: usize,
        column: usize,
        message: String,
    },
    #[error("invalid schema at `{path}`: {message}")]
    Invalid { path: String, message: String },
    #[error("unknown schema keys: {}", .0.join(", "))]
    UnknownKeys(Vec<String>),
    #[error("segment probabilities sum to {sum:.4}, outside 1 ± {tolerance}")]
    SegmentSum { sum: f64, tolerance: f64 },
    #[error("empty segment distribution")]
    EmptyDistribution,
}

#[derive(Debug, Clone, Copy, Default)]
pub struct ParseOptions {
    /// Reject unknown keys instead of warning about them.
    pub strict: bool,
}

/// Result of [`parse_schema`]: the schema plus non-fatal parse warnings.
#[derive(Debug, Clone)]
pub struct ParsedSchema {
    pub schema: StochasticSchema,
    pub warnings: Vec<String>,
}

/// Parses schema JSON text, applying defaults.
pub fn parse_schema(text: &str, options: ParseOptions) -> Result<ParsedSchema, SchemaError> {
    let (raw, unknown) = raw::from_json(text)?;
    if options.strict && !unknown.is_empty() {
        return Err(SchemaError::UnknownKeys(unknown));
    }
    let schema = raw.resolve()?;
    let warnings = unknown
        .into_iter()
        .map(|path| format!("unknown key `{path}` ignored"))
        .collect();
    Ok(ParsedSchema { schema, warnings })
}

/// Divides every probability by the distribution's sum.
pub fn normalize_segment_dist(
    dist: &BTreeMap<u32, f64>,
) -> Result<BTreeMap<u32, f64>, SchemaError> {
    if dist.is_empty() {
        return Err(SchemaError::EmptyDistribution);
    }
    let sum: f64 = dist.values().sum();
    if !sum.is_finite() || (sum - 1.0).abs() > SEGMENT_SUM_TOLERANCE {
        return Err(SchemaError::SegmentSum {
            sum,
            tolerance: SEGMENT_SUM_TOLERANCE,
        });
    }
    Ok(dist.iter().map(|(&k, &p)| (k, p / sum)).collect())
}

/// RGB colour, written as `#rrggbb` in schema files.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Color(pub [u8; 3]);

impl Color {
    pub const BLACK: Color = Color([0, 0, 0]);
    pub const WHITE: Color = Color([255, 255, 255]);
}

impl FromStr for Color {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let named = match s.to_ascii_lowercase().as_str() {
            "black" => Some([0, 0, 0]),
            "white" => Some([255, 255, 255]),
            "gray" | "grey" => Some([128, 128, 128]),
            "navy" => Some([0, 0, 128]),
            "red" => Some([255, 0, 0]),
            "blue" => Some([0, 0, 255]),
            "darkblue" => Some([0, 0, 139]),
            "darkgray" | "darkgrey" => Some([64, 64, 64]),
            _ => None,
        };
        if let Some(rgb) = named {
            return Ok(Color(rgb));
        }
        let hex = s
            .strip_prefix('#')
            .ok_or_else(|| format!("colour `{s}` is neither a name nor #rrggbb"))?;
        if hex.len() != 6 || !hex.is_ascii() {
            return Err(format!("colour `{s}` must have six hex digits"));
        }
        let channel = |i: usize| {
            u8::from_str_radix(&hex[i..i + 2], 16).map_err(|_| format!("bad hex in colour `{s}`"))
        };
        Ok(Color([channel(0)?, channel(2)?, channel(4)?]))
    }
}

impl fmt::Display for Color {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let [r, g, b] = self.0;
        write!(f, "#{r:02x}{g:02x}{b:02x}")
    }
}

impl Serialize for Color {
    fn serialize<S: Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        serializer.collect_str(self)
    }
}

impl<'de> Deserialize<'de> for Color {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> Result<Self, D::Error> {
        let s = String::deserialize(deserializer)?;
        s.parse().map_err(serde::de::Error::custom)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Alignment {
    Left,
    Right,
    Center,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum TabType {
    Horizontal,
    Vertical,
}

/// A row count that is either fixed or drawn uniformly from configured bounds.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum RowSpec {
    Fixed(u32),
    Random,
}

impl Serialize for RowSpec {
    fn serialize<S: Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        match self {
            RowSpec::Fixed(n) => serializer.serialize_u32(*n),
            RowSpec::Random => serializer.serialize_str("random"),
        }
    }
}

impl<'de> Deserialize<'de> for RowSpec {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> Result<Self, D::Error> {
        #[derive(Deserialize)]
        #[serde(untagged)]
        enum Repr {
            Count(u32),
            Word(String),
        }
        match Repr::deserialize(deserializer)? {
            Repr::Count(n) => Ok(RowSpec::Fixed(n)),
            Repr::Word(w) if w.eq_ignore_ascii_case("random") => Ok(RowSpec::Random),
            Repr::Word(w) => Err(serde::de::Error::custom(format!(
                "expected a row count or \"random\", found \"{w}\""
            ))),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct TabulateSpec {
    pub create_prob: f64,
    pub rows: RowSpec,
    pub num_empty_rows: RowSpec,
    pub tab_types: Vec<TabType>,
}

impl Default for TabulateSpec {
    fn default() -> Self {
        Self {
            create_prob: 0.0,
            rows: RowSpec::Fixed(1),
            num_empty_rows: RowSpec::Fixed(0),
            tab_types: vec![TabType::Horizontal, TabType::Vertical],
        }
    }
}

/// Partial font override; unset fields inherit the document-wide choice.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct FontVariance {
    #[serde(default, skip_serializing_if = "Option::is_none", alias = "font")]
    pub face: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub size: Option<u32>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub color: Option<Color>,
}

/// Optional limits handed to value generators.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct ValueConstraints {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub min_length: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub max_length: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub min: Option<i64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub max: Option<i64>,
}

impl ValueConstraints {
    pub fn is_empty(&self) -> bool {
        *self == ValueConstraints::default()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct EntityDef {
    /// Class label used in annotations.
    pub name: String,
    pub entity_type: String,
    pub presence_probability: f64,
    pub headers: Vec<String>,
    pub align: Vec<Alignment>,
    pub header_align: Vec<Alignment>,
    pub font_variance: Option<FontVariance>,
    /// Forces the header regardless of the document-wide header draw.
    pub add_header: Option<bool>,
    pub format: Option<String>,
    pub constraints: ValueConstraints,
}

impl EntityDef {
    pub fn forces_header(&self) -> bool {
        self.add_header == Some(true)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct EntityGroupDef {
    pub name: String,
    pub segment_dist: BTreeMap<u32, f64>,
    pub tabulate: TabulateSpec,
    pub headers: Vec<String>,
    pub header_probability: f64,
    pub presence_probability: f64,
    /// Pinned `(row, col)` cell inside the section grid.
    pub grid_position: Option<(u32, u32)>,
    pub group_alignment: Vec<Alignment>,
    pub entities: Vec<EntityDef>,
    pub entity_shuffle_groups: Vec<Vec<String>>,
}

impl EntityGroupDef {
    pub fn entity(&self, name: &str) -> Option<&EntityDef> {
        self.entities.iter().find(|e| e.name == name)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct TranslationConfig {
    pub enable: bool,
    pub target_lang_code: String,
}

impl Default for TranslationConfig {
    fn default() -> Self {
        Self {
            enable: false,
            target_lang_code: String::new(),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct StructuralConfig {
    pub num_segments: u32,
    /// `(rows, cols)` of every section's virtual grid.
    pub segment_size: (u32, u32),
    pub canvas_width: u32,
    pub canvas_height: u32,
    pub intra_group_y_offset: u32,
    pub intra_group_x_offset: u32,
    pub inter_group_y_offset: u32,
    /// Multiplier applied to the width of a space between words.
    pub space_width_weight: f64,
    /// Blank border kept around the page content.
    pub page_margin: u32,
    pub min_rows: u32,
    pub max_rows: u32,
    pub min_empty_rows: u32,
    pub max_empty_rows: u32,
}

impl Default for StructuralConfig {
    fn default() -> Self {
        Self {
            num_segments: 7,
            segment_size: (2, 3),
            canvas_width: 1240,
            canvas_height: 1754,
            intra_group_y_offset: 6,
            intra_group_x_offset: 12,
            inter_group_y_offset: 16,
            space_width_weight: 1.0,
            page_margin: 48,
            min_rows: 1,
            max_rows: 8,
            min_empty_rows: 0,
            max_empty_rows: 2,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SeparatorStyle {
    /// No rules drawn.
    None,
    /// Horizontal rules between rows.
    Lines,
    /// Full cell borders.
    Grid,
}

#[derive(Debug, Clone, PartialEq)]
pub struct TableStyleConfig {
    pub header_font_faces: Vec<String>,
    pub header_font_colors: Vec<Color>,
    pub row_font_faces: Vec<String>,
    pub row_font_colors: Vec<Color>,
    pub separator_styles: Vec<SeparatorStyle>,
    pub cell_padding: u32,
}

impl Default for TableStyleConfig {
    fn default() -> Self {
        Self {
            header_font_faces: vec![DEFAULT_FACE.to_string()],
            header_font_colors: vec![Color::BLACK],
            row_font_faces: vec![DEFAULT_FACE.to_string()],
            row_font_colors: vec![Color::BLACK],
            separator_styles: vec![SeparatorStyle::Lines],
            cell_padding: 4,
        }
    }
}

/// Face name meaning "whatever face the document sampled for this role".
pub const DEFAULT_FACE: &str = "default";

/// Named token lists; every value drawing on one list reuses one token per document.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct PatternGroups(pub Vec<(String, Vec<String>)>);

impl PatternGroups {
    pub fn get(&self, name: &str) -> Option<&[String]> {
        self.0
            .iter()
            .find(|(n, _)| n == name)
            .map(|(_, tokens)| tokens.as_slice())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct CommonConfig {
    pub faker_locale: String,
    pub translation: TranslationConfig,
    pub generator_key: String,
    pub structural: StructuralConfig,
    pub font_colors: Vec<Color>,
    pub font_size: (u32, u32),
    pub font_dir: Option<String>,
    pub canvas_color_options: Vec<Color>,
    pub table_config: TableStyleConfig,
    pub show_entity_headers_probability: f64,
    pub consistent_patterns_for_values: PatternGroups,
    pub expected_keys: Vec<String>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct StochasticSchema {
    pub doc_type_name: String,
    pub common: CommonConfig,
    pub entity_groups: Vec<EntityGroupDef>,
}

impl StochasticSchema {
    /// Pretty JSON in the schema file format, with every default written out.
    pub fn to_json(&self) -> String {
        let raw = raw::RawSchema::from_schema(self);
        serde_json::to_string_pretty(&raw).expect("schema serialization cannot fail")
    }

    /// Hex SHA-256 of the canonical serialization.
    pub fn digest(&self) -> String {
        hex::encode(Sha256::digest(self.to_json().as_bytes()))
    }

    pub fn group(&self, name: &str) -> Option<&EntityGroupDef> {
        self.entity_groups.iter().find(|g| g.name == name)
    }

    /// Segment ids any group can land in, ascending.
    pub fn segment_ids(&self) -> Vec<u32> {
        let mut ids: Vec<u32> = self
            .entity_groups
            .iter()
            .flat_map(|g| g.segment_dist.keys().copied())
            .collect();
        ids.sort_unstable();
        ids.dedup();
        ids
    }
}
