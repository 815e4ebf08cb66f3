//! Annotation artifacts: per-entity JSON records, word-level IOB tags, and
//! key-value (KIE) targets.

use serde::ser::SerializeMap;
use serde::{Deserialize, Serialize, Serializer};

use crate::geometry::Rect;
use crate::layout::Role;
use crate::render::RenderedEntity;

pub const OTHER_CLASS: &str = "Other";

/// A box with its text, serialized as `[[x, y], [w, h], "text"]`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(from = "([u32; 2], [u32; 2], String)", into = "([u32; 2], [u32; 2], String)")]
pub struct BoxedText {
    pub rect: Rect,
    pub text: String,
}

impl From<([u32; 2], [u32; 2], String)> for BoxedText {
    fn from(([x, y], [w, h], text): ([u32; 2], [u32; 2], String)) -> Self {
        Self {
            rect: Rect::new(x, y, w, h),
            text,
        }
    }
}

impl From<BoxedText> for ([u32; 2], [u32; 2], String) {
    fn from(b: BoxedText) -> Self {
        ([b.rect.x, b.rect.y], [b.rect.w, b.rect.h], b.text)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Annotation {
    pub entity: BoxedText,
    pub children: Vec<BoxedText>,
    pub class: String,
}

/// Values take their entity name as class when it is an expected key;
/// everything else, headers included, is `Other`.
pub fn build_annotations(rendered: &[RenderedEntity], expected_keys: &[String]) -> Vec<Annotation> {
    rendered
        .iter()
        .map(|e| {
            let class = if e.role == Role::Value && expected_keys.contains(&e.label) {
                e.label.clone()
            } else {
                OTHER_CLASS.to_string()
            };
            Annotation {
                entity: BoxedText {
                    rect: e.rect,
                    text: e.text.clone(),
                },
                children: e
                    .tokens
                    .iter()
                    .map(|t| BoxedText {
                        rect: t.rect,
                        text: t.text.clone(),
                    })
                    .collect(),
                class,
            }
        })
        .collect()
}

fn to_pretty_json<T: Serialize + ?Sized>(value: &T) -> String {
    let mut out = Vec::new();
    let fmt = serde_json::ser::PrettyFormatter::with_indent(b"    ");
    let mut ser = serde_json::Serializer::with_formatter(&mut out, fmt);
    value.serialize(&mut ser).expect("in-memory serialization");
    String::from_utf8(out).expect("serde_json emits UTF-8")
}

/// Four-space indented JSON array of records.
pub fn export_annotation_json(annotations: &[Annotation]) -> String {
    to_pretty_json(annotations)
}

pub fn parse_annotation_json(text: &str) -> Result<Vec<Annotation>, serde_json::Error> {
    serde_json::from_str(text)
}

fn anchor(a: &Annotation) -> Rect {
    a.children.first().map_or(a.entity.rect, |c| c.rect)
}

/// Annotation indices in reading order: entities are clustered into lines by
/// vertical overlap of their first token, lines run top to bottom, and
/// entities within a line left to right.
pub fn reading_order(annotations: &[Annotation]) -> Vec<usize> {
    let mut idx: Vec<usize> = (0..annotations.len()).collect();
    idx.sort_by_key(|&i| {
        let r = anchor(&annotations[i]);
        (r.y, r.x)
    });
    let mut lines: Vec<Vec<usize>> = Vec::new();
    let mut line_bottom = 0;
    for i in idx {
        let r = anchor(&annotations[i]);
        match lines.last_mut() {
            Some(line) if r.y < line_bottom => {
                line.push(i);
                line_bottom = line_bottom.max(r.bottom());
            }
            _ => {
                lines.push(vec![i]);
                line_bottom = r.bottom();
            }
        }
    }
    lines
        .into_iter()
        .flat_map(|mut line| {
            line.sort_by_key(|&i| (anchor(&annotations[i]).x, anchor(&annotations[i]).y));
            line
        })
        .collect()
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct IobToken {
    pub text: String,
    pub rect: Rect,
    pub tag: String,
}

/// Word tags in reading order; each entity's tokens stay contiguous.
pub fn export_iob(annotations: &[Annotation]) -> Vec<IobToken> {
    let mut out = Vec::new();
    for i in reading_order(annotations) {
        let a = &annotations[i];
        for (k, c) in a.children.iter().enumerate() {
            let tag = if a.class == OTHER_CLASS {
                "O".to_string()
            } else if k == 0 {
                format!("B-{}", a.class)
            } else {
                format!("I-{}", a.class)
            };
            out.push(IobToken {
                text: c.text.clone(),
                rect: c.rect,
                tag,
            });
        }
    }
    out
}

/// One `token\tx\ty\tw\th\ttag` line per token.
pub fn iob_to_tsv(tokens: &[IobToken]) -> String {
    tokens
        .iter()
        .map(|t| format!("{}\t{}\t{}\t{}\t{}\t{}\n", t.text, t.rect.x, t.rect.y, t.rect.w, t.rect.h, t.tag))
        .collect()
}

/// Expected key to value text, in expected-key order.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct KieTarget(pub Vec<(String, String)>);

impl KieTarget {
    pub fn get(&self, key: &str) -> Option<&str> {
        self.0.iter().find(|(k, _)| k == key).map(|(_, v)| v.as_str())
    }
}

impl Serialize for KieTarget {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        let mut map = s.serialize_map(Some(self.0.len()))?;
        for (k, v) in &self.0 {
            map.serialize_entry(k, v)?;
        }
        map.end()
    }
}

/// Values of each expected key, pipe-joined in reading order; absent keys map
/// to `""`. Line breaks inside a value become spaces.
pub fn export_kie(annotations: &[Annotation], expected_keys: &[String]) -> KieTarget {
    let order = reading_order(annotations);
    KieTarget(
        expected_keys
            .iter()
            .map(|key| {
                let joined = order
                    .iter()
                    .map(|&i| &annotations[i])
                    .filter(|a| &a.class == key)
                    .map(|a| a.entity.text.replace('\n', " "))
                    .collect::<Vec<_>>()
                    .join("|");
                (key.clone(), joined)
            })
            .collect(),
    )
}

pub fn export_kie_json(target: &KieTarget) -> String {
    to_pretty_json(target)
}
