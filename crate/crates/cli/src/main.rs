//! `docsynth`: validate schemas, generate document batches, measure diversity.

use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::time::Instant;

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand};
use docsynth::annotate::parse_annotation_json;
use docsynth::diversity::{mpcs, parse_vector_file, EmbeddingProvider, LayoutFeatureProvider};
use docsynth::layout::LayoutKind;
use docsynth::pipeline::{read_manifest, ExportFlags, GenerationJob, Generator, PipelineError, RecordStatus};
use docsynth::render::fonts::FontLibrary;
use docsynth::values::FailureMode;
use docsynth::{parse_schema, validate_schema, ParseOptions, StochasticSchema};

const EXIT_USAGE: u8 = 1;
const EXIT_VALIDATION: u8 = 2;
const EXIT_GENERATION: u8 = 3;

#[derive(Parser)]
#[command(name = "docsynth", version, about = "Synthetic semi-structured document generator")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Check a schema and print the validation report.
    Validate {
        schema: PathBuf,
        /// Reject unknown keys.
        #[arg(long)]
        strict: bool,
    },
    /// Generate a batch of documents.
    Generate(GenerateArgs),
    /// Mean pairwise cosine similarity of a generated batch or of vectors.
    Diversity {
        /// Output directory of a `generate` run.
        #[arg(long, conflicts_with = "vectors", required_unless_present = "vectors")]
        input: Option<PathBuf>,
        /// Text file with one vector per line.
        #[arg(long)]
        vectors: Option<PathBuf>,
        /// Also write the report as JSON here.
        #[arg(long)]
        report: Option<PathBuf>,
    },
}

#[derive(Args)]
struct GenerateArgs {
    schema: PathBuf,
    #[arg(long, default_value_t = 1)]
    count: usize,
    /// Master seed; drawn at random (and printed) when omitted.
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    out: PathBuf,
    /// Value locale, e.g. `es` or `en_US`.
    #[arg(long)]
    locale: Option<String>,
    /// Translate headers into this language.
    #[arg(long)]
    translate: Option<String>,
    #[arg(long, default_value = "grid")]
    layout: LayoutKind,
    #[arg(long, default_value_t = 1)]
    instances_per_permutation: u32,
    /// Extra outputs: any of `iob`, `kie`, `layout`.
    #[arg(long, value_delimiter = ',')]
    export: Vec<String>,
    /// Also write red-box overlay images.
    #[arg(long)]
    debug_overlay: bool,
    #[arg(long, default_value_t = 1)]
    workers: usize,
    /// Reject unknown schema keys.
    #[arg(long)]
    strict: bool,
    /// Keep source text when the translation provider errors.
    #[arg(long)]
    lenient_translation: bool,
    /// Directory of .ttf/.otf faces.
    #[arg(long, env = "DOCSYNTH_FONT_DIR")]
    font_dir: Option<PathBuf>,
}

/// An error with its exit code.
struct Failure(u8, anyhow::Error);

fn fail(code: u8) -> impl FnOnce(anyhow::Error) -> Failure {
    move |e| Failure(code, e)
}

fn load_schema(path: &Path, strict: bool) -> Result<StochasticSchema, Failure> {
    let text = std::fs::read_to_string(path)
        .with_context(|| format!("reading {}", path.display()))
        .map_err(fail(EXIT_USAGE))?;
    let parsed = parse_schema(&text, ParseOptions { strict })
        .with_context(|| path.display().to_string())
        .map_err(fail(EXIT_VALIDATION))?;
    for w in &parsed.warnings {
        log::warn!("{w}");
    }
    Ok(parsed.schema)
}

fn cmd_validate(path: &Path, strict: bool) -> Result<(), Failure> {
    let schema = load_schema(path, strict)?;
    let report = validate_schema(&schema);
    for e in &report.errors {
        eprintln!("error: {e}");
    }
    for w in &report.warnings {
        eprintln!("warning: {w}");
    }
    for g in &report.renormalized_groups {
        eprintln!("note: segment distribution of `{g}` renormalized");
    }
    if !report.is_ok() {
        return Err(Failure(
            EXIT_VALIDATION,
            anyhow::anyhow!("{} validation error(s)", report.errors.len()),
        ));
    }
    println!("ok: {} ({} entity groups)", path.display(), schema.entity_groups.len());
    Ok(())
}

fn export_flags(list: &[String], debug_overlay: bool) -> Result<ExportFlags> {
    let mut flags = ExportFlags {
        debug_overlay,
        ..Default::default()
    };
    for item in list.iter().map(|s| s.trim()).filter(|s| !s.is_empty()) {
        match item {
            "iob" => flags.iob = true,
            "kie" => flags.kie = true,
            "layout" => flags.layout = true,
            other => bail!("unknown export `{other}` (expected iob, kie, layout)"),
        }
    }
    Ok(flags)
}

fn cmd_generate(args: GenerateArgs) -> Result<(), Failure> {
    let export = export_flags(&args.export, args.debug_overlay).map_err(fail(EXIT_USAGE))?;
    if args.workers == 0 {
        return Err(Failure(EXIT_USAGE, anyhow::anyhow!("--workers must be at least 1")));
    }
    let schema = load_schema(&args.schema, args.strict)?;
    let report = validate_schema(&schema);
    if !report.is_ok() {
        for e in &report.errors {
            eprintln!("error: {e}");
        }
        return Err(Failure(EXIT_VALIDATION, anyhow::anyhow!("schema is invalid")));
    }
    let font_dir = args
        .font_dir
        .clone()
        .or_else(|| schema.common.font_dir.as_ref().map(PathBuf::from));
    let fonts = match &font_dir {
        Some(dir) => FontLibrary::with_font_dir(dir).map_err(|e| Failure(EXIT_USAGE, e.into()))?,
        None => FontLibrary::builtin(),
    };
    let seed = args.seed.unwrap_or_else(rand::random);
    println!("master seed: {seed}");
    let mut job = GenerationJob::new(seed, args.count, &args.out);
    job.locale = args.locale;
    job.translate = args.translate;
    job.translation_mode = if args.lenient_translation {
        FailureMode::Lenient
    } else {
        FailureMode::FailFast
    };
    job.layout = args.layout;
    job.instances_per_permutation = args.instances_per_permutation;
    job.export = export;
    job.workers = args.workers;

    let generator = Generator::new(schema, fonts);
    let start = Instant::now();
    let manifest = match generator.generate_batch(&job) {
        Ok(m) => m,
        Err(PipelineError::FailureRate { manifest, .. }) => {
            for r in manifest.records.iter().filter(|r| r.status == RecordStatus::Failed).take(10) {
                eprintln!("document {}: {}", r.index, r.error.as_deref().unwrap_or("unknown error"));
            }
            return Err(Failure(
                EXIT_GENERATION,
                anyhow::anyhow!("{} of {} documents failed", manifest.failed, manifest.count),
            ));
        }
        Err(e @ PipelineError::Config(_)) => return Err(Failure(EXIT_USAGE, e.into())),
        Err(e) => return Err(Failure(EXIT_GENERATION, e.into())),
    };
    let secs = start.elapsed().as_secs_f64();
    println!(
        "{} documents ({} ok, {} regenerated, {} failed) in {:.1}s, layout {}, uniqueness {:.3}",
        manifest.count,
        manifest.ok,
        manifest.regenerated,
        manifest.failed,
        secs,
        manifest.layout_mode.as_str(),
        manifest.uniqueness_ratio
    );
    println!("output: {}", args.out.display());
    Ok(())
}

fn cmd_diversity(input: Option<PathBuf>, vectors: Option<PathBuf>, report_path: Option<PathBuf>) -> Result<(), Failure> {
    let (vecs, provider) = if let Some(path) = vectors {
        let text = std::fs::read_to_string(&path)
            .with_context(|| format!("reading {}", path.display()))
            .map_err(fail(EXIT_USAGE))?;
        let v = parse_vector_file(&text).map_err(|e| Failure(EXIT_VALIDATION, e.into()))?;
        (v, "external".to_string())
    } else {
        let dir = input.expect("clap enforces one input");
        let manifest = read_manifest(&dir).map_err(|e| Failure(EXIT_USAGE, e.into()))?;
        let provider = LayoutFeatureProvider {
            canvas_width: manifest.canvas_width,
            canvas_height: manifest.canvas_height,
            expected_keys: manifest.expected_keys.clone(),
        };
        let mut vecs = Vec::new();
        for f in manifest.records.iter().flat_map(|r| &r.files).filter(|f| f.ends_with(".ann.json")) {
            let path = dir.join(f);
            let text = std::fs::read_to_string(&path)
                .with_context(|| format!("reading {}", path.display()))
                .map_err(fail(EXIT_USAGE))?;
            let ann = parse_annotation_json(&text)
                .with_context(|| path.display().to_string())
                .map_err(fail(EXIT_VALIDATION))?;
            vecs.push(provider.embed(&ann).map_err(|e| Failure(EXIT_VALIDATION, e.into()))?);
        }
        (vecs, provider.id().to_string())
    };
    let report = mpcs(&vecs, &provider).map_err(|e| Failure(EXIT_VALIDATION, e.into()))?;
    println!("{report}");
    if let Some(path) = report_path {
        let json = serde_json::to_string_pretty(&report).expect("report serializes");
        std::fs::write(&path, json)
            .with_context(|| format!("writing {}", path.display()))
            .map_err(fail(EXIT_USAGE))?;
    }
    Ok(())
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() {
                ExitCode::from(EXIT_USAGE)
            } else {
                ExitCode::SUCCESS
            };
        }
    };
    let result = match cli.command {
        Command::Validate { schema, strict } => cmd_validate(&schema, strict),
        Command::Generate(args) => cmd_generate(args),
        Command::Diversity { input, vectors, report } => cmd_diversity(input, vectors, report),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(Failure(code, e)) => {
            eprintln!("error: {e:#}");
            ExitCode::from(code)
        }
    }
}
