//! Bundled sample inputs: an invoice schema and a two-record annotation file.

use crate::schema::{parse_schema, ParseOptions, StochasticSchema};

/// Invoice schema with eight entity groups over a seven-section page.
pub const INVOICE_SCHEMA: &str = include_str!("../fixtures/invoice_schema.json");

/// Two annotation records in the exporter's JSON layout.
pub const ANNOTATION_GOLDEN: &str = include_str!("../fixtures/annotation_golden.json");

pub fn invoice_schema() -> StochasticSchema {
    parse_schema(INVOICE_SCHEMA, ParseOptions { strict: true })
        .expect("bundled schema parses")
        .schema
}
