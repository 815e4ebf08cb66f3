use std::collections::BTreeMap;
use std::path::Path;
use std::sync::Arc;

use docsynth::annotate::{export_iob, export_kie, Annotation, OTHER_CLASS};
use docsynth::fixtures::invoice_schema;
use docsynth::layout::{plan_layout, LayoutInput, LayoutKind};
use docsynth::pipeline::{GenerationJob, Generator};
use docsynth::render::fonts::{FontLibrary, BUILTIN_SANS};
use docsynth::render::render_document;
use docsynth::render::text::TextEngine;
use docsynth::sampling::{FontSpec, LayoutMode, RandomSource, DOMAIN_LAYOUT};
use docsynth::schema::{Color, TabType};
use docsynth::Rect;
use image::{Rgb, RgbImage};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

const DEJAVU: &str = "/usr/share/fonts/truetype/dejavu";

fn generator() -> Generator {
    Generator::new(invoice_schema(), FontLibrary::builtin())
}

fn libraries() -> Vec<FontLibrary> {
    let mut libs = vec![FontLibrary::builtin()];
    if Path::new(DEJAVU).is_dir() {
        libs.push(FontLibrary::with_font_dir(Path::new(DEJAVU)).unwrap());
    }
    libs
}

#[test]
fn measured_width_matches_drawn_ink() {
    let mut rng = ChaCha8Rng::seed_from_u64(9);
    let alphabet: Vec<char> = "abcdefghijklmnopqrstuvwxyzABCDEFGHIJKLMNOPQRSTUVWXYZ0123456789.,-/€$£ñáé".chars().collect();
    for lib in libraries() {
        let faces = lib.sampling_faces();
        let engine = TextEngine::new(Arc::new(lib), 1.0);
        for _ in 0..1000 {
            let len = rng.random_range(1..12);
            let word: String = (0..len).map(|_| alphabet[rng.random_range(0..alphabet.len())]).collect();
            let font = FontSpec {
                face: faces[rng.random_range(0..faces.len())].clone(),
                size: rng.random_range(10..24),
                color: Color::BLACK,
            };
            let (w, h) = engine.measure_text(&word, &font);
            let mut canvas = RgbImage::from_pixel(w + 20, h + 20, Rgb([255, 255, 255]));
            engine.draw_run(&mut canvas, 10, 10, &word, &font);
            let ink: Vec<(u32, u32)> = canvas
                .enumerate_pixels()
                .filter(|(_, _, p)| p.0 != [255, 255, 255])
                .map(|(x, y, _)| (x, y))
                .collect();
            if ink.is_empty() {
                continue;
            }
            let max_x = ink.iter().map(|p| p.0).max().unwrap();
            let min_x = ink.iter().map(|p| p.0).min().unwrap();
            // Ink may not spill more than a pixel outside the measured run.
            assert!(min_x + 1 >= 10 && max_x <= 10 + w, "{word:?} {font:?}: ink {min_x}..={max_x}, box 10+{w}");
        }
    }
}

#[test]
fn token_ink_stays_in_token_boxes() {
    for lib in libraries() {
        let gen = Generator::new(invoice_schema(), lib);
        let job = GenerationJob::new(21, 5, "unused");
        for i in 0..5 {
            let doc = gen.produce(&job, i).ok().unwrap();
            let bg = Rgb(doc.instance.permutation.style.canvas_color.0);
            let (mut inside, mut total) = (0u64, 0u64);
            for (e, tokens) in doc.rendered.entities.iter().zip(doc.annotations.iter().map(|a| &a.children)) {
                let block_font = doc
                    .plan
                    .blocks
                    .iter()
                    .flat_map(|b| &b.blocks)
                    .find(|b| b.label == e.label && b.role == e.role)
                    .map(|b| b.font.clone())
                    .unwrap();
                for t in tokens {
                    let r = t.rect;
                    let mut canvas = RgbImage::from_pixel(r.right() + 30, r.bottom() + 30, bg);
                    gen.engine().draw_run(&mut canvas, r.x as i64, r.y as i64, &t.text, &block_font);
                    for (x, y, p) in canvas.enumerate_pixels() {
                        if *p != bg {
                            total += 1;
                            inside += r.contains_point(x, y) as u64;
                        }
                    }
                }
            }
            assert!(inside as f64 >= 0.99 * total as f64, "{inside}/{total}");
        }
    }
}

fn class_values(anns: &[Annotation]) -> BTreeMap<String, Vec<String>> {
    let mut out: BTreeMap<String, Vec<String>> = BTreeMap::new();
    for a in anns.iter().filter(|a| a.class != OTHER_CLASS) {
        out.entry(a.class.clone()).or_default().push(a.entity.text.replace('\n', " "));
    }
    out
}

#[test]
fn iob_and_kie_agree_with_annotations() {
    let gen = generator();
    let keys = gen.schema.common.expected_keys.clone();
    let job = GenerationJob::new(5, 60, "unused");
    for i in 0..60 {
        let doc = gen.produce(&job, i).ok().unwrap();
        let iob = export_iob(&doc.annotations);
        let kie = export_kie(&doc.annotations, &keys);
        assert_eq!(kie.0.iter().map(|(k, _)| k).collect::<Vec<_>>(), keys.iter().collect::<Vec<_>>());
        let by_class = class_values(&doc.annotations);
        // Rebuild per-class values from the tags.
        let mut from_iob: BTreeMap<String, Vec<String>> = BTreeMap::new();
        let mut prev = "O".to_string();
        for t in &iob {
            if let Some(c) = t.tag.strip_prefix("B-") {
                from_iob.entry(c.to_string()).or_default().push(t.text.clone());
            } else if let Some(c) = t.tag.strip_prefix("I-") {
                assert!(prev == format!("B-{c}") || prev == format!("I-{c}"), "{prev} then {}", t.tag);
                let last = from_iob.get_mut(c).unwrap().last_mut().unwrap();
                last.push(' ');
                last.push_str(&t.text);
            }
            prev = t.tag.clone();
        }
        for key in &keys {
            let kie_vals: Vec<String> = match kie.get(key).unwrap() {
                "" => Vec::new(),
                v => v.split('|').map(str::to_string).collect(),
            };
            let iob_vals = from_iob.get(key).cloned().unwrap_or_default();
            assert_eq!(kie_vals, iob_vals, "{key}");
            let mut sorted_ann = by_class.get(key).cloned().unwrap_or_default();
            let mut sorted_kie = kie_vals.clone();
            sorted_ann.sort();
            sorted_kie.sort();
            assert_eq!(sorted_ann, sorted_kie, "{key}");
        }
        for (class, vals) in &by_class {
            let b = iob.iter().filter(|t| t.tag == format!("B-{class}")).count();
            assert_eq!(b, vals.len());
        }
    }
}

#[test]
fn headers_appear_once_with_header_role() {
    let gen = generator();
    let job = GenerationJob::new(8, 30, "unused");
    for i in 0..30 {
        let doc = gen.produce(&job, i).ok().unwrap();
        let mut expected: Vec<String> = doc.instance.headers().map(|h| h.text.clone()).collect();
        let mut got: Vec<String> = doc
            .rendered
            .entities
            .iter()
            .filter(|e| e.role != docsynth::layout::Role::Value)
            .map(|e| e.text.clone())
            .collect();
        expected.sort();
        got.sort();
        // Tokenization collapses runs of whitespace.
        let norm = |v: Vec<String>| v.into_iter().map(|s| s.split_whitespace().collect::<Vec<_>>().join(" ")).collect::<Vec<_>>();
        assert_eq!(norm(got), norm(expected));
    }
}

#[test]
fn table_orientations_hold_the_same_values() {
    let gen = generator();
    let job = GenerationJob::new(13, 40, "unused");
    let s = &gen.schema.common.structural;
    let mut checked = 0;
    for i in 0..40 {
        let doc = gen.produce(&job, i).ok().unwrap();
        let Some(gi) = doc.instance.permutation.groups.iter().position(|g| matches!(g.layout_mode, LayoutMode::Table(_))) else {
            continue;
        };
        let mut flipped = doc.instance.clone();
        if let LayoutMode::Table(t) = &mut flipped.permutation.groups[gi].layout_mode {
            t.orientation = match t.orientation {
                TabType::Horizontal => TabType::Vertical,
                TabType::Vertical => TabType::Horizontal,
            };
        }
        let input = LayoutInput {
            doc: &flipped,
            engine: gen.engine(),
            structural: s,
            min_font_size: gen.schema.common.font_size.0,
        };
        let src = RandomSource::new(13, i as u64);
        let Ok(plan) = plan_layout(&input, LayoutKind::Grid, &mut src.rng(DOMAIN_LAYOUT)) else {
            continue;
        };
        let rendered = render_document(&flipped, &plan, gen.engine(), s.canvas_width, s.canvas_height, false);
        let pairs = |ents: &[docsynth::render::RenderedEntity]| {
            let mut v: Vec<(String, String)> = ents
                .iter()
                .filter(|e| e.group == doc.instance.groups[gi].name)
                .map(|e| (format!("{:?}{}", e.role, e.label), e.text.clone()))
                .collect();
            v.sort();
            v
        };
        let before = pairs(&doc.rendered.entities);
        let after = pairs(&rendered.entities);
        assert_eq!(before, after);
        let geom = |ents: &[docsynth::render::RenderedEntity]| -> Vec<Rect> {
            ents.iter().filter(|e| e.group == doc.instance.groups[gi].name).map(|e| e.rect).collect()
        };
        assert_ne!(geom(&doc.rendered.entities), geom(&rendered.entities));
        checked += 1;
    }
    assert!(checked > 0, "no tabular group sampled");
}

#[test]
fn spilled_or_not_every_group_is_placed_once() {
    let gen = generator();
    let job = GenerationJob::new(99, 100, "unused");
    let sans = FontSpec {
        face: BUILTIN_SANS.into(),
        size: 12,
        color: Color::BLACK,
    };
    assert!(gen.engine().line_height(&sans) > 0);
    for i in 0..100 {
        let doc = gen.produce(&job, i).ok().unwrap();
        assert_eq!(doc.plan.placements.len(), doc.instance.groups.len());
        let cells: usize = doc.plan.sections.iter().map(|g| g.cells.len()).sum();
        assert_eq!(cells, doc.instance.groups.len());
    }
}
