//! End-to-end acceptance checks. Runs without the libtest harness so each
//! criterion prints exactly one PASS/FAIL line.

use std::collections::{BTreeMap, BTreeSet};
use std::path::Path;
use std::process::Command;
use std::time::Instant;

use docsynth::annotate::{build_annotations, export_annotation_json, parse_annotation_json, Annotation};
use docsynth::diversity::{mpcs, EmbeddingProvider, LayoutFeatureProvider};
use docsynth::fixtures::{invoice_schema, ANNOTATION_GOLDEN};
use docsynth::layout::{section_rect, LayoutKind, LayoutPlan, Role};
use docsynth::pipeline::{read_manifest, ExportFlags, GenerationJob, Generator, Manifest, RecordStatus};
use docsynth::render::fonts::FontLibrary;
use docsynth::render::{RenderedEntity, RenderedToken};
use docsynth::sampling::{freeze_permutation, DocumentPermutation, LayoutMode, RandomSource, DOMAIN_FREEZE};
use docsynth::schema::normalize_segment_dist;
use docsynth::values::{FixtureDictionary, TranslationProvider};
use docsynth::{Rect, StochasticSchema};
use statrs::distribution::{ChiSquared, ContinuousCDF};

type Outcome = Result<String, String>;

fn check(cond: bool, msg: impl Into<String>) -> Result<(), String> {
    if cond {
        Ok(())
    } else {
        Err(msg.into())
    }
}

fn generator() -> Generator {
    Generator::new(invoice_schema(), FontLibrary::builtin())
}

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_docsynth"))
}

fn schema_path() -> String {
    format!("{}/../core/fixtures/invoice_schema.json", env!("CARGO_MANIFEST_DIR"))
}

fn run_cli(args: &[&str]) -> Result<String, String> {
    let out = bin().args(args).output().map_err(|e| e.to_string())?;
    let stdout = String::from_utf8_lossy(&out.stdout).into_owned();
    if !out.status.success() {
        return Err(format!(
            "docsynth {} exited {:?}: {}",
            args.join(" "),
            out.status.code(),
            String::from_utf8_lossy(&out.stderr)
        ));
    }
    Ok(stdout)
}

// 1
fn golden_replay() -> Outcome {
    let token = |text: &str, r: Rect| RenderedToken {
        text: text.into(),
        rect: r,
    };
    let entity = |label: &str, text: &str, tokens: Vec<RenderedToken>| RenderedEntity {
        role: Role::Value,
        label: label.into(),
        group: "g".into(),
        text: text.into(),
        rect: Rect::union_all(tokens.iter().map(|t| &t.rect)).unwrap(),
        tokens,
    };
    let rendered = vec![
        entity(
            "InsurerName",
            "SecureTrust Insurance",
            vec![token("SecureTrust", Rect::new(132, 38, 206, 27)), token("Insurance", Rect::new(344, 38, 165, 27))],
        ),
        entity(
            "MemberName",
            "Scott Williams",
            vec![token("Scott", Rect::new(387, 205, 42, 11)), token("Williams", Rect::new(432, 205, 60, 11))],
        ),
    ];
    let keys = vec!["InsurerName".to_string(), "MemberName".to_string()];
    let anns = build_annotations(&rendered, &keys);
    check(export_annotation_json(&anns) == ANNOTATION_GOLDEN, "export differs from the golden listing")?;
    check(parse_annotation_json(ANNOTATION_GOLDEN).map_err(|e| e.to_string())? == anns, "golden parse differs")?;
    let e = anns[0].entity.rect;
    let last = anns[0].children[1].rect;
    check(e == Rect::new(132, 38, 377, 27), format!("union box {e:?}"))?;
    check(last.right() == 509 && e.right() == 509, "right edges are not 509")?;
    Ok("exact match; 344+165 = 132+377 = 509".into())
}

fn pairwise_disjoint(rects: &[Rect]) -> bool {
    rects
        .iter()
        .enumerate()
        .all(|(i, a)| rects[i + 1..].iter().all(|b| a.intersection_area(b) == 0))
}

// 2
fn geometry_suite() -> Outcome {
    let gen = generator();
    let s = gen.schema.common.structural.clone();
    let canvas = Rect::new(0, 0, s.canvas_width, s.canvas_height);
    let job = GenerationJob::new(2024, 500, "unused");
    let (mut entities, mut pinned, mut spilled) = (0usize, 0usize, 0usize);
    for i in 0..500 {
        let doc = gen.produce(&job, i).map_err(|(e, _)| format!("doc {i}: {e}"))?;
        for a in &doc.annotations {
            entities += 1;
            let union = Rect::union_all(a.children.iter().map(|c| &c.rect));
            check(union == Some(a.entity.rect), format!("doc {i}: entity box is not the union of its children"))?;
            check(canvas.contains(&a.entity.rect), format!("doc {i}: box out of canvas"))?;
            check(
                a.children.iter().all(|c| canvas.contains(&c.rect)),
                format!("doc {i}: token out of canvas"),
            )?;
        }
        let rects: Vec<Rect> = doc.plan.placements.iter().map(|p| p.rect).collect();
        check(pairwise_disjoint(&rects), format!("doc {i}: overlapping groups"))?;
        for (p, g) in doc.plan.placements.iter().zip(&doc.instance.permutation.groups) {
            if let Some(pin) = g.grid_position {
                pinned += 1;
                check(p.cell == Some(pin), format!("doc {i}: {} not in pinned cell", g.name))?;
            }
            if p.spilled {
                spilled += 1;
            } else {
                check(
                    section_rect(&s, g.segment).contains(&p.rect),
                    format!("doc {i}: {} outside its section", g.name),
                )?;
            }
        }
    }
    Ok(format!(
        "500 docs, {entities} entities, 0 overlaps, {pinned} pinned groups in place, {spilled} spilled groups"
    ))
}

fn within_sigma(hits: usize, n: usize, p: f64, k: f64) -> bool {
    let expected = n as f64 * p;
    let sigma = (n as f64 * p * (1.0 - p)).sqrt();
    (hits as f64 - expected).abs() <= k * sigma + 1e-9
}

fn freezes(schema: &StochasticSchema, n: usize, seed: u64) -> Result<Vec<DocumentPermutation>, String> {
    let faces = FontLibrary::builtin().sampling_faces();
    (0..n)
        .map(|i| {
            freeze_permutation(schema, &faces, &mut RandomSource::new(seed, i as u64).rng(DOMAIN_FREEZE))
                .map_err(|e| e.to_string())
        })
        .collect()
}

// 3
fn statistical_suite() -> Outcome {
    let schema = invoice_schema();
    let n = 10_000;
    let perms = freezes(&schema, n, 77)?;
    let mut tests = 0;
    let mut worst_p = 1.0f64;
    let present = |gi: usize| perms.iter().filter_map(move |p| p.groups.iter().find(|g| g.schema_index == gi));
    for (gi, g) in schema.entity_groups.iter().enumerate() {
        let groups: Vec<_> = present(gi).collect();
        let m = groups.len();
        tests += 1;
        check(
            within_sigma(m, n, g.presence_probability, 4.0),
            format!("{} presence {m}/{n} vs p={}", g.name, g.presence_probability),
        )?;
        if m == 0 {
            continue;
        }
        for (ei, e) in g.entities.iter().enumerate() {
            let hits = groups.iter().filter(|fg| fg.entities.iter().any(|fe| fe.schema_index == ei)).count();
            tests += 1;
            check(
                within_sigma(hits, m, e.presence_probability, 4.0),
                format!("{}.{} presence {hits}/{m} vs p={}", g.name, e.name, e.presence_probability),
            )?;
        }
        if !g.headers.is_empty() {
            let shown: Vec<&String> = groups.iter().filter_map(|fg| fg.header.as_ref()).collect();
            tests += 1;
            check(
                within_sigma(shown.len(), m, g.header_probability, 4.0),
                format!("{} header rate", g.name),
            )?;
            for h in &g.headers {
                let c = shown.iter().filter(|s| **s == h).count();
                tests += 1;
                check(
                    within_sigma(c, shown.len(), 1.0 / g.headers.len() as f64, 4.0),
                    format!("{} header `{h}` chosen {c}/{}", g.name, shown.len()),
                )?;
            }
        }
        for a in &g.group_alignment {
            let c = groups.iter().filter(|fg| fg.alignment == *a).count();
            tests += 1;
            check(
                within_sigma(c, m, 1.0 / g.group_alignment.len() as f64, 4.0),
                format!("{} alignment {a:?}", g.name),
            )?;
        }
        if g.tabulate.create_prob > 0.0 && g.tabulate.create_prob < 1.0 {
            let tables = groups.iter().filter(|fg| matches!(fg.layout_mode, LayoutMode::Table(_))).count();
            tests += 1;
            check(
                within_sigma(tables, m, g.tabulate.create_prob, 4.0),
                format!("{} table rate {tables}/{m}", g.name),
            )?;
        }
        let dist = normalize_segment_dist(&g.segment_dist).map_err(|e| e.to_string())?;
        if dist.len() > 1 {
            let mut counts: BTreeMap<u32, usize> = BTreeMap::new();
            for fg in &groups {
                *counts.entry(fg.segment).or_default() += 1;
            }
            let stat: f64 = dist
                .iter()
                .map(|(seg, p)| {
                    let e = p * m as f64;
                    let o = *counts.get(seg).unwrap_or(&0) as f64;
                    (o - e).powi(2) / e
                })
                .sum();
            let df = (dist.len() - 1) as f64;
            let p_value = 1.0 - ChiSquared::new(df).map_err(|e| e.to_string())?.cdf(stat);
            worst_p = worst_p.min(p_value);
            tests += 1;
            check(p_value > 0.01, format!("{} segment chi-square p={p_value:.4}", g.name))?;
            check(counts.keys().all(|k| dist.contains_key(k)), format!("{} off-support segment", g.name))?;
        }
    }
    let shown = perms.iter().filter(|p| p.show_entity_headers).count();
    tests += 1;
    check(
        within_sigma(shown, n, schema.common.show_entity_headers_probability, 4.0),
        "entity header draw rate",
    )?;
    let colors = &schema.common.canvas_color_options;
    for c in colors {
        let hits = perms.iter().filter(|p| p.style.canvas_color == *c).count();
        tests += 1;
        check(within_sigma(hits, n, 1.0 / colors.len() as f64, 4.0), "canvas color choice")?;
    }
    Ok(format!("{n} freezes, {tests} checks, min segment chi-square p={worst_p:.3}"))
}

fn dir_files(dir: &Path) -> Result<BTreeMap<String, Vec<u8>>, String> {
    let mut out = BTreeMap::new();
    for e in std::fs::read_dir(dir).map_err(|e| e.to_string())? {
        let path = e.map_err(|e| e.to_string())?.path();
        let name = path.file_name().unwrap().to_string_lossy().into_owned();
        out.insert(name, std::fs::read(&path).map_err(|e| e.to_string())?);
    }
    Ok(out)
}

// 4
fn determinism() -> Outcome {
    let gen = generator();
    let tmp = tempfile::tempdir().map_err(|e| e.to_string())?;
    let mut manifests = Vec::new();
    let start = Instant::now();
    for workers in [1, 8] {
        let mut job = GenerationJob::new(4242, 200, tmp.path().join(format!("w{workers}")));
        job.workers = workers;
        job.export = ExportFlags {
            iob: true,
            kie: true,
            layout: true,
            debug_overlay: false,
        };
        manifests.push(gen.generate_batch(&job).map_err(|e| e.to_string())?);
    }
    let secs = start.elapsed().as_secs_f64();
    check(manifests[0] == manifests[1], "manifests differ")?;
    let a = dir_files(&tmp.path().join("w1"))?;
    let b = dir_files(&tmp.path().join("w8"))?;
    check(a.len() == b.len(), "file sets differ")?;
    for (name, bytes) in &a {
        check(b.get(name) == Some(bytes), format!("{name} differs between worker counts"))?;
    }
    check(secs < 120.0, format!("took {secs:.1}s"))?;
    Ok(format!("200 docs, {} files byte-identical at 1 and 8 workers ({secs:.1}s)", a.len()))
}

// 5
fn uniqueness() -> Outcome {
    let perms = freezes(&invoice_schema(), 1000, 5)?;
    let distinct: BTreeSet<String> = perms.iter().map(|p| p.fingerprint()).collect();
    let ratio = distinct.len() as f64 / perms.len() as f64;
    check(ratio >= 0.95, format!("uniqueness {ratio:.3}"))?;
    Ok(format!("{} of 1000 fingerprints distinct ({ratio:.3})", distinct.len()))
}

// 6
fn multilinguality() -> Outcome {
    let tmp = tempfile::tempdir().map_err(|e| e.to_string())?;
    let out = tmp.path().join("es");
    let out_s = out.to_string_lossy().into_owned();
    run_cli(&[
        "generate", &schema_path(), "--count", "100", "--seed", "31", "--out", &out_s, "--locale", "es", "--translate", "es",
    ])?;
    let manifest = read_manifest(&out).map_err(|e| e.to_string())?;
    check(manifest.failed == 0, "failed documents")?;
    let (mut headers, mut values) = (0, 0);
    for r in &manifest.records {
        let p = r.provenance.as_ref().ok_or("missing provenance")?;
        check(p.headers == p.headers_translated, format!("doc {}: untranslated header", r.index))?;
        check(p.value_locales.keys().all(|k| k == "es"), format!("doc {}: non-es values", r.index))?;
        headers += p.headers;
        values += p.value_locales.values().sum::<usize>();
    }
    // Independent check: every header matches the es dictionary entry of its source.
    let dict = FixtureDictionary::builtin();
    let gen = generator();
    let mut job = GenerationJob::new(31, 100, "unused");
    job.locale = Some("es".into());
    job.translate = Some("es".into());
    for i in 0..100 {
        let doc = gen.produce(&job, i).map_err(|(e, _)| e.to_string())?;
        for h in doc.instance.headers() {
            let expected = dict.translate(&h.source, "es").map_err(|e| e.to_string())?;
            check(expected.as_deref() == Some(h.text.as_str()), format!("`{}` -> `{}`", h.source, h.text))?;
        }
    }
    Ok(format!("{headers} headers via es dictionary, {values} values from es bundle (100%)"))
}

fn embed_all(provider: &LayoutFeatureProvider, anns: &[Vec<Annotation>]) -> Result<Vec<Vec<f64>>, String> {
    anns.iter().map(|a| provider.embed(a).map_err(|e| e.to_string())).collect()
}

// 7
fn mpcs_suite() -> Outcome {
    let gen = generator();
    let s = &gen.schema.common.structural;
    let provider = LayoutFeatureProvider {
        canvas_width: s.canvas_width,
        canvas_height: s.canvas_height,
        expected_keys: gen.schema.common.expected_keys.clone(),
    };
    let batch = |k: u32, seed: u64| -> Result<Vec<Vec<Annotation>>, String> {
        let mut job = GenerationJob::new(seed, 100, "unused");
        job.instances_per_permutation = k;
        (0..100)
            .map(|i| gen.produce(&job, i).map(|d| d.annotations).map_err(|(e, _)| e.to_string()))
            .collect()
    };
    let randomized = batch(1, 8)?;
    let single = batch(100, 8)?;
    let one = embed_all(&provider, &randomized[..1])?.remove(0);
    let dup = mpcs(&vec![one; 10], provider.id()).map_err(|e| e.to_string())?;
    check((dup.mean - 1.0).abs() <= 1e-9, format!("duplicated set {}", dup.mean))?;
    let hand = mpcs(&[vec![1.0, 0.0], vec![1.0, 0.0], vec![0.0, 1.0]], "hand").map_err(|e| e.to_string())?;
    check((hand.mean - 1.0 / 3.0).abs() <= 1e-9, format!("hand mean {}", hand.mean))?;
    check((hand.std - 2f64.sqrt() / 3.0).abs() <= 1e-9, format!("hand std {}", hand.std))?;
    let cli = run_cli_vectors()?;
    check(cli.contains("0.333 ± 0.471"), format!("cli printed {cli:?}"))?;
    let r = mpcs(&embed_all(&provider, &randomized)?, provider.id()).map_err(|e| e.to_string())?;
    let f = mpcs(&embed_all(&provider, &single)?, provider.id()).map_err(|e| e.to_string())?;
    check(r.mean < f.mean, format!("randomized {:.3} not below single-permutation {:.3}", r.mean, f.mean))?;
    Ok(format!(
        "duplicates {:.9}; hand case exact; randomized {:.3} ± {:.3} < single-permutation {:.3} ± {:.3}",
        dup.mean, r.mean, r.std, f.mean, f.std
    ))
}

fn run_cli_vectors() -> Result<String, String> {
    let tmp = tempfile::tempdir().map_err(|e| e.to_string())?;
    let path = tmp.path().join("v.txt");
    std::fs::write(&path, "1 0\n1 0\n0 1\n").map_err(|e| e.to_string())?;
    run_cli(&["diversity", "--vectors", &path.to_string_lossy()])
}

// 8
fn ablation() -> Outcome {
    let tmp = tempfile::tempdir().map_err(|e| e.to_string())?;
    let mut manifests: Vec<Manifest> = Vec::new();
    for mode in ["grid", "random"] {
        let out = tmp.path().join(mode).to_string_lossy().into_owned();
        run_cli(&[
            "generate", &schema_path(), "--count", "60", "--seed", "17", "--out", &out, "--layout", mode, "--export", "layout",
        ])?;
        manifests.push(read_manifest(&tmp.path().join(mode)).map_err(|e| e.to_string())?);
    }
    let (grid, random) = (&manifests[0], &manifests[1]);
    check(grid.layout_mode == LayoutKind::Grid && random.layout_mode == LayoutKind::Random, "layout_mode not recorded")?;
    check(random.failed == 0, format!("{} random-layout failures", random.failed))?;
    let fp = |m: &Manifest| m.records.iter().map(|r| r.fingerprint.clone()).collect::<Vec<_>>();
    check(fp(grid) == fp(random), "permutations differ between modes")?;
    let canvas = Rect::new(0, 0, random.canvas_width, random.canvas_height);
    let mut differing = 0;
    for r in &random.records {
        check(r.status != RecordStatus::Failed, "failed record")?;
        let file = |ext: &str| r.files.iter().find(|f| f.ends_with(ext)).cloned().ok_or(format!("no {ext}"));
        let dir = tmp.path().join("random");
        let plan: LayoutPlan = serde_json::from_str(
            &std::fs::read_to_string(dir.join(file(".layout.json")?)).map_err(|e| e.to_string())?,
        )
        .map_err(|e| e.to_string())?;
        check(plan.mode == LayoutKind::Random, "plan mode")?;
        let rects: Vec<Rect> = plan.placements.iter().map(|p| p.rect).collect();
        check(pairwise_disjoint(&rects), format!("doc {}: overlap", r.index))?;
        check(rects.iter().all(|x| canvas.contains(x)), format!("doc {}: out of canvas", r.index))?;
        let anns = parse_annotation_json(&std::fs::read_to_string(dir.join(file(".ann.json")?)).map_err(|e| e.to_string())?)
            .map_err(|e| e.to_string())?;
        check(!anns.is_empty(), "no annotations")?;
        let grid_ann = std::fs::read(tmp.path().join("grid").join(file(".ann.json")?)).map_err(|e| e.to_string())?;
        let rand_ann = std::fs::read(dir.join(file(".ann.json")?)).map_err(|e| e.to_string())?;
        differing += (grid_ann != rand_ann) as usize;
    }
    check(differing == random.records.len(), "some documents have identical geometry in both modes")?;
    Ok(format!("60 random-layout docs valid and disjoint; same permutations as grid mode, geometry differs in {differing}"))
}

// 9
fn throughput() -> Outcome {
    let gen = generator();
    let tmp = tempfile::tempdir().map_err(|e| e.to_string())?;
    let job = GenerationJob::new(9, 100, tmp.path());
    let start = Instant::now();
    let m = gen.generate_batch(&job).map_err(|e| e.to_string())?;
    let rate = m.count as f64 / start.elapsed().as_secs_f64();
    check(rate >= 10.0, format!("{rate:.1} docs/s"))?;
    Ok(format!(
        "{rate:.1} docs/s single worker at {}x{} (PNG + annotations written)",
        m.canvas_width, m.canvas_height
    ))
}

fn main() {
    let criteria: [(&str, fn() -> Outcome); 9] = [
        ("1 golden annotation replay", golden_replay),
        ("2 geometry suite", geometry_suite),
        ("3 statistical sampling suite", statistical_suite),
        ("4 parallel determinism", determinism),
        ("5 permutation uniqueness", uniqueness),
        ("6 multilinguality", multilinguality),
        ("7 MPCS suite", mpcs_suite),
        ("8 layout ablation harness", ablation),
        ("9 throughput", throughput),
    ];
    let mut failed = 0;
    for (name, f) in criteria {
        let start = Instant::now();
        let result = f();
        let secs = start.elapsed().as_secs_f64();
        match result {
            Ok(detail) => println!("PASS  criterion {name}: {detail} [{secs:.1}s]"),
            Err(why) => {
                failed += 1;
                println!("FAIL  criterion {name}: {why} [{secs:.1}s]");
            }
        }
    }
    if failed > 0 {
        std::process::exit(1);
    }
}
