//! Schema validation. Failures are collected into a report, never raised.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;

use serde::Serialize;

use super::{RowSpec, StochasticSchema, SEGMENT_SUM_TOLERANCE};
use crate::values::ValueGeneratorRegistry;

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct Issue {
    pub path: String,
    pub message: String,
}

impl fmt::Display for Issue {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}: {}", self.path, self.message)
    }
}

#[derive(Debug, Clone, Default, Serialize)]
pub struct ValidationReport {
    pub errors: Vec<Issue>,
    pub warnings: Vec<Issue>,
    /// Groups whose segment distribution is within tolerance but not exactly 1.
    pub renormalized_groups: Vec<String>,
}

impl ValidationReport {
    pub fn is_ok(&self) -> bool {
        self.errors.is_empty()
    }

    fn error(&mut self, path: impl Into<String>, message: impl Into<String>) {
        self.errors.push(Issue {
            path: path.into(),
            message: message.into(),
        });
    }

    fn warn(&mut self, path: impl Into<String>, message: impl Into<String>) {
        self.warnings.push(Issue {
            path: path.into(),
            message: message.into(),
        });
    }
}

impl fmt::Display for ValidationReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for e in &self.errors {
            writeln!(f, "error: {e}")?;
        }
        for w in &self.warnings {
            writeln!(f, "warning: {w}")?;
        }
        write!(
            f,
            "{} error(s), {} warning(s)",
            self.errors.len(),
            self.warnings.len()
        )
    }
}

fn check_probability(report: &mut ValidationReport, path: &str, p: f64) {
    if !(0.0..=1.0).contains(&p) {
        report.error(path, format!("probability {p} outside [0, 1]"));
    }
}

/// Validates against the built-in generator registry.
pub fn validate_schema(schema: &StochasticSchema) -> ValidationReport {
    validate_schema_with(schema, &ValueGeneratorRegistry::builtin())
}

pub fn validate_schema_with(
    schema: &StochasticSchema,
    registry: &ValueGeneratorRegistry,
) -> ValidationReport {
    let mut report = ValidationReport::default();
    let common = &schema.common;
    let s = &common.structural;

    if schema.entity_groups.is_empty() {
        report.error("entity_groups", "schema defines no entity groups");
    }
    if common.expected_keys.is_empty() {
        report.error("expected_keys", "expected_keys must not be empty");
    }
    if common.font_size.0 > common.font_size.1 || common.font_size.0 == 0 {
        report.error(
            "font_size",
            format!(
                "font size range {:?} must satisfy 0 < min <= max",
                common.font_size
            ),
        );
    }
    if common.font_colors.is_empty() {
        report.error("font_colors", "font_colors must not be empty");
    }
    if common.canvas_color_options.is_empty() {
        report.error("canvas_color_options", "canvas_color_options must not be empty");
    }
    check_probability(
        &mut report,
        "show_entity_headers_probability",
        common.show_entity_headers_probability,
    );

    let t = &common.table_config;
    for (key, empty) in [
        ("header_font_faces", t.header_font_faces.is_empty()),
        ("header_font_colors", t.header_font_colors.is_empty()),
        ("row_font_faces", t.row_font_faces.is_empty()),
        ("row_font_colors", t.row_font_colors.is_empty()),
        ("separator_styles", t.separator_styles.is_empty()),
    ] {
        if empty {
            report.error(format!("table_config.{key}"), "option list must not be empty");
        }
    }

    for (key, value) in [
        ("num_segments", s.num_segments),
        ("canvas_width", s.canvas_width),
        ("canvas_height", s.canvas_height),
        ("segment_size.rows", s.segment_size.0),
        ("segment_size.cols", s.segment_size.1),
        ("min_rows", s.min_rows),
    ] {
        if value == 0 {
            report.error(format!("structural_config.{key}"), "must be greater than zero");
        }
    }
    if s.min_rows > s.max_rows {
        report.error("structural_config.max_rows", "max_rows must be >= min_rows");
    }
    if s.min_empty_rows > s.max_empty_rows {
        report.error(
            "structural_config.max_empty_rows",
            "max_empty_rows must be >= min_empty_rows",
        );
    }
    if !(s.space_width_weight.is_finite() && s.space_width_weight > 0.0) {
        report.error("structural_config.space_width_weight", "must be a positive number");
    }
    if 2 * s.page_margin >= s.canvas_width.min(s.canvas_height) {
        report.error("structural_config.page_margin", "margin leaves no drawable area");
    }

    if !registry.has_bundle(&common.generator_key) {
        report.error(
            "fake_value_generator_class",
            format!("generator `{}` is not registered", common.generator_key),
        );
    }
    if !registry.supports_locale(&common.faker_locale) {
        report.error(
            "faker_locale",
            format!("locale `{}` has no generator data", common.faker_locale),
        );
    }
    if common.translation.enable && common.translation.target_lang_code.trim().is_empty() {
        report.error("translation.target_lang_code", "translation enabled without a language");
    }

    let mut group_names = BTreeSet::new();
    let mut pins: BTreeMap<(u32, u32), Vec<&str>> = BTreeMap::new();
    for (gi, g) in schema.entity_groups.iter().enumerate() {
        let gp = format!("entity_groups[{gi}] ({})", g.name);
        if !group_names.insert(g.name.as_str()) {
            report.error(&gp, format!("duplicate group name `{}`", g.name));
        }
        check_probability(&mut report, &format!("{gp}.probability"), g.presence_probability);
        check_probability(
            &mut report,
            &format!("{gp}.headerProbability"),
            g.header_probability,
        );
        check_probability(
            &mut report,
            &format!("{gp}.tabulate.create"),
            g.tabulate.create_prob,
        );

        if g.segment_dist.is_empty() {
            report.error(format!("{gp}.segment"), "segment distribution is empty");
        } else {
            for (&id, &p) in &g.segment_dist {
                check_probability(&mut report, &format!("{gp}.segment.{id}"), p);
                if id >= s.num_segments {
                    report.error(
                        format!("{gp}.segment.{id}"),
                        format!("segment {id} is outside num_segments {}", s.num_segments),
                    );
                }
            }
            let sum: f64 = g.segment_dist.values().sum();
            if (sum - 1.0).abs() > SEGMENT_SUM_TOLERANCE || !sum.is_finite() {
                report.error(
                    format!("{gp}.segment"),
                    format!(
                        "segment probabilities of group `{}` sum to {sum:.4}, outside 1 ± {SEGMENT_SUM_TOLERANCE}",
                        g.name
                    ),
                );
            } else if (sum - 1.0).abs() > 1e-9 {
                report.warn(
                    format!("{gp}.segment"),
                    format!("segment probabilities sum to {sum:.4}; renormalized"),
                );
                report.renormalized_groups.push(g.name.clone());
            }
        }

        if g.tabulate.tab_types.is_empty() {
            report.error(format!("{gp}.tabulate.tabType"), "tabType must not be empty");
        }
        if g.tabulate.rows == RowSpec::Fixed(0) {
            report.error(format!("{gp}.tabulate.rows"), "rows must be at least 1");
        }
        if g.header_probability > 0.0 && g.headers.is_empty() {
            report.error(
                format!("{gp}.header"),
                "headerProbability > 0 but no header options",
            );
        }
        if g.group_alignment.is_empty() {
            report.error(format!("{gp}.groupAlignment"), "alignment list must not be empty");
        }
        if let Some((r, c)) = g.grid_position {
            if r >= s.segment_size.0 || c >= s.segment_size.1 {
                report.error(
                    format!("{gp}.gridPosition"),
                    format!(
                        "cell ({r}, {c}) outside the {}x{} section grid",
                        s.segment_size.0, s.segment_size.1
                    ),
                );
            }
            pins.entry((r, c)).or_default().push(&g.name);
        }
        if g.entities.is_empty() {
            report.error(format!("{gp}.entities"), "group has no entities");
        }

        let mut entity_names = BTreeSet::new();
        for (ei, e) in g.entities.iter().enumerate() {
            let ep = format!("{gp}.entities[{ei}] ({})", e.name);
            if !entity_names.insert(e.name.as_str()) {
                report.error(&ep, format!("duplicate entity name `{}` in group `{}`", e.name, g.name));
            }
            check_probability(&mut report, &format!("{ep}.probability"), e.presence_probability);
            let header_possible =
                e.forces_header() || common.show_entity_headers_probability > 0.0;
            if header_possible && e.headers.is_empty() {
                report.error(
                    format!("{ep}.header"),
                    "entity can be shown with a header but has no header options",
                );
            }
            if e.align.is_empty() || e.header_align.is_empty() {
                report.error(format!("{ep}.align"), "alignment lists must not be empty");
            }
            if !registry.has_type(&common.generator_key, &e.entity_type) {
                report.error(
                    format!("{ep}.type"),
                    format!("entity type `{}` has no registered generator", e.entity_type),
                );
            }
            let c = &e.constraints;
            if let (Some(lo), Some(hi)) = (c.min_length, c.max_length) {
                if lo > hi {
                    report.error(format!("{ep}.constraints"), "min_length > max_length");
                }
            }
            if c.max_length == Some(0) {
                report.error(format!("{ep}.constraints"), "max_length must be positive");
            }
            if let (Some(lo), Some(hi)) = (c.min, c.max) {
                if lo > hi {
                    report.error(format!("{ep}.constraints"), "min > max");
                }
            }
            if !common.expected_keys.contains(&e.name) {
                report.warn(&ep, "not in expected_keys; annotated as Other");
            }
        }

        let mut seen = BTreeSet::new();
        for (si, subgroup) in g.entity_shuffle_groups.iter().enumerate() {
            for name in subgroup {
                if g.entity(name).is_none() {
                    report.error(
                        format!("{gp}.entityShuffleGroups[{si}]"),
                        format!("group `{}` has no entity named `{name}`", g.name),
                    );
                }
                if !seen.insert(name.as_str()) {
                    report.error(
                        format!("{gp}.entityShuffleGroups[{si}]"),
                        format!("entity `{name}` appears in more than one shuffle subgroup"),
                    );
                }
            }
        }
    }

    for ((r, c), names) in pins {
        if names.len() > 1 {
            report.warn(
                "gridPosition",
                format!(
                    "groups {} share pinned cell ({r}, {c}); co-located documents will be regenerated",
                    names.join(", ")
                ),
            );
        }
    }

    report
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::schema::{parse_schema, ParseOptions};

    fn schema(groups: &str) -> StochasticSchema {
        let text = format!(
            r#"{{"expected_keys": ["a", "b", "c"], "show_entity_headers_probability": 0,
                "entity_groups": {groups}}}"#
        );
        parse_schema(&text, ParseOptions::default()).unwrap().schema
    }

    #[test]
    fn fixture_schema_validates_cleanly() {
        let schema = crate::fixtures::invoice_schema();
        let report = validate_schema(&schema);
        assert!(report.errors.is_empty(), "{report}");
        assert!(report
            .renormalized_groups
            .contains(&"DeliveryDetails".to_string()));
    }

    #[test]
    fn rounded_segment_sum_warns() {
        let s = schema(
            r#"[{"name": "G", "headerProbability": 0,
                "segment": {"0": 0.3, "1": 0.3, "2": 0.3, "4": 0.03, "5": 0.03, "6": 0.03},
                "entities": [{"name": "a", "type": "name"}]}]"#,
        );
        let report = validate_schema(&s);
        assert!(report.is_ok(), "{report}");
        assert_eq!(report.renormalized_groups, vec!["G".to_string()]);
        assert_eq!(report.warnings.len(), 1);
    }

    #[test]
    fn out_of_tolerance_segment_sum_errors() {
        let s = schema(
            r#"[{"name": "Totals", "headerProbability": 0, "segment": {"0": 0.5, "1": 0.2},
                "entities": [{"name": "a", "type": "name"}]}]"#,
        );
        let report = validate_schema(&s);
        assert_eq!(report.errors.len(), 1);
        assert!(report.errors[0].message.contains("Totals"));
    }

    #[test]
    fn dangling_shuffle_reference_errors() {
        let s = schema(
            r#"[{"name": "G", "headerProbability": 0, "entityShuffleGroups": [["a", "zz"]],
                "entities": [{"name": "a", "type": "name"}, {"name": "b", "type": "name"}]}]"#,
        );
        let report = validate_schema(&s);
        assert_eq!(report.errors.len(), 1);
        let msg = &report.errors[0].message;
        assert!(msg.contains("`G`") && msg.contains("`zz`"), "{msg}");
    }

    #[test]
    fn overlapping_shuffle_groups_error() {
        let s = schema(
            r#"[{"name": "G", "headerProbability": 0, "entityShuffleGroups": [["a", "b"], ["b", "c"]],
                "entities": [{"name": "a", "type": "name"}, {"name": "b", "type": "name"}, {"name": "c", "type": "name"}]}]"#,
        );
        assert_eq!(validate_schema(&s).errors.len(), 1);
    }

    #[test]
    fn structural_errors_are_reported() {
        let s = schema(
            r#"[{"name": "G", "headerProbability": 2, "probability": -0.1, "gridPosition": [5, 0],
                "entities": [{"name": "a", "type": "warp_drive"}, {"name": "a", "type": "name"}]},
                {"name": "G", "headerProbability": 0, "entities": [{"name": "b", "type": "name"}]}]"#,
        );
        let report = validate_schema(&s);
        let text = report.to_string();
        for needle in ["duplicate group", "headerProbability", "probability -0.1", "gridPosition", "warp_drive", "duplicate entity"] {
            assert!(text.contains(needle), "missing `{needle}` in\n{text}");
        }
    }

    #[test]
    fn unregistered_generator_key_errors() {
        let text = r#"{"expected_keys": ["a"], "fake_value_generator_class": "utils.NoSuchGenerator",
            "entity_groups": [{"name": "G", "headerProbability": 0, "entities": [{"name": "a", "type": "name", "header": ["A"]}]}]}"#;
        let s = parse_schema(text, ParseOptions::default()).unwrap().schema;
        let report = validate_schema(&s);
        assert!(report
            .errors
            .iter()
            .any(|e| e.message.contains("utils.NoSuchGenerator")));
    }

    #[test]
    fn header_options_required_when_header_possible() {
        let text = r#"{"expected_keys": ["a"], "show_entity_headers_probability": 0.5,
            "entity_groups": [{"name": "G", "headerProbability": 0.2, "entities": [{"name": "a", "type": "name"}]}]}"#;
        let s = parse_schema(text, ParseOptions::default()).unwrap().schema;
        assert_eq!(validate_schema(&s).errors.len(), 2);
    }
}
