//! End-to-end generation: freeze, instantiate, lay out, render, annotate,
//! write. Documents are independent and run in parallel; every random draw
//! comes from a stream derived from the master seed and document index, so
//! output bytes do not depend on the worker count.

use std::collections::{BTreeMap, BTreeSet};
use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::sync::Arc;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::annotate::{self, Annotation};
use crate::layout::{plan_layout, LayoutError, LayoutInput, LayoutKind, LayoutPlan};
use crate::render::fonts::FontLibrary;
use crate::render::text::TextEngine;
use crate::render::{encode_png, render_document, RenderedDocument};
use crate::sampling::{freeze_permutation, RandomSource, SamplingError, DOMAIN_FREEZE, DOMAIN_LAYOUT, DOMAIN_VALUES};
use crate::schema::StochasticSchema;
use crate::values::{
    instantiate, DocumentInstance, FailureMode, FixtureDictionary, InstantiateOptions, TranslationProvider,
    TranslationTarget, ValueError, ValueGeneratorRegistry,
};

/// Retries after a layout failure, each on a fresh derived stream.
pub const MAX_LAYOUT_RETRIES: u32 = 3;
/// Largest tolerated share of failed documents in a batch.
pub const MAX_FAILURE_RATE: f64 = 0.05;

#[derive(Debug, Error)]
pub enum PipelineError {
    #[error("invalid job: {0}")]
    Config(String),
    #[error(transparent)]
    Sampling(#[from] SamplingError),
    #[error(transparent)]
    Values(#[from] ValueError),
    #[error(transparent)]
    Layout(#[from] LayoutError),
    #[error("{path}: {message}")]
    Io { path: String, message: String },
    #[error("{failed} of {count} documents failed (limit {:.0}%)", MAX_FAILURE_RATE * 100.0)]
    FailureRate {
        failed: usize,
        count: usize,
        manifest: Box<Manifest>,
    },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct ExportFlags {
    pub iob: bool,
    pub kie: bool,
    /// Per-document layout dump (`.layout.json`).
    pub layout: bool,
    /// Red-box overlay image (`.debug.png`); diagnostic only.
    pub debug_overlay: bool,
}

#[derive(Debug, Clone)]
pub struct GenerationJob {
    pub master_seed: u64,
    pub count: usize,
    /// Overrides the schema's locale.
    pub locale: Option<String>,
    /// Target language for headers; overrides the schema's translation block.
    pub translate: Option<String>,
    pub translation_mode: FailureMode,
    pub layout: LayoutKind,
    /// Documents sharing one frozen permutation (1 = every document is fresh).
    pub instances_per_permutation: u32,
    pub out_dir: PathBuf,
    pub export: ExportFlags,
    pub workers: usize,
}

impl GenerationJob {
    pub fn new(master_seed: u64, count: usize, out_dir: impl Into<PathBuf>) -> Self {
        Self {
            master_seed,
            count,
            locale: None,
            translate: None,
            translation_mode: FailureMode::FailFast,
            layout: LayoutKind::Grid,
            instances_per_permutation: 1,
            out_dir: out_dir.into(),
            export: ExportFlags::default(),
            workers: 1,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum RecordStatus {
    Ok,
    Regenerated,
    Failed,
}

/// Where headers and values came from, for auditing locale switches.
#[derive(Debug, Clone, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct Provenance {
    pub headers: usize,
    pub headers_translated: usize,
    /// Generated values per locale tag.
    pub value_locales: BTreeMap<String, usize>,
}

impl Provenance {
    fn of(doc: &DocumentInstance) -> Self {
        let mut p = Provenance::default();
        for h in doc.headers() {
            p.headers += 1;
            p.headers_translated += h.translated as usize;
        }
        for e in doc.groups.iter().flat_map(|g| &g.entities) {
            *p.value_locales.entry(e.locale.clone()).or_default() += e.values.len();
        }
        p
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct DocumentRecord {
    pub index: usize,
    /// Stream id of the values, layout, and (unless shared) permutation.
    pub stream: u64,
    pub permutation_stream: u64,
    pub fingerprint: Option<String>,
    pub value_digest: Option<String>,
    /// Paths relative to the output directory.
    pub files: Vec<String>,
    pub retries: u32,
    pub status: RecordStatus,
    pub error: Option<String>,
    pub provenance: Option<Provenance>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Manifest {
    pub schema_digest: String,
    pub master_seed: u64,
    pub layout_mode: LayoutKind,
    pub doc_type: String,
    pub canvas_width: u32,
    pub canvas_height: u32,
    pub expected_keys: Vec<String>,
    pub locale: String,
    pub translate: Option<String>,
    pub instances_per_permutation: u32,
    pub count: usize,
    pub ok: usize,
    pub regenerated: usize,
    pub failed: usize,
    /// Distinct fingerprints over generated documents.
    pub uniqueness_ratio: f64,
    pub records: Vec<DocumentRecord>,
}

pub const MANIFEST_FILE: &str = "manifest.json";

/// Everything produced for one document, before files are written.
pub struct GeneratedDocument {
    pub index: usize,
    pub instance: DocumentInstance,
    pub plan: LayoutPlan,
    pub rendered: RenderedDocument,
    pub annotations: Vec<Annotation>,
    pub retries: u32,
}

/// Shared, read-only generation resources.
pub struct Generator {
    pub schema: StochasticSchema,
    pub registry: ValueGeneratorRegistry,
    pub translator: Arc<dyn TranslationProvider>,
    engine: TextEngine,
    faces: Vec<String>,
}

impl Generator {
    pub fn new(schema: StochasticSchema, fonts: FontLibrary) -> Self {
        let faces = fonts.sampling_faces();
        let engine = TextEngine::new(Arc::new(fonts), schema.common.structural.space_width_weight);
        Self {
            schema,
            registry: ValueGeneratorRegistry::builtin(),
            translator: Arc::new(FixtureDictionary::builtin()),
            engine,
            faces,
        }
    }

    /// Built-in fonts, or the schema's font directory when it has one.
    pub fn from_schema(schema: StochasticSchema) -> Result<Self, PipelineError> {
        let fonts = match &schema.common.font_dir {
            Some(dir) => FontLibrary::with_font_dir(Path::new(dir)).map_err(|e| PipelineError::Config(e.to_string()))?,
            None => FontLibrary::builtin(),
        };
        Ok(Self::new(schema, fonts))
    }

    pub fn engine(&self) -> &TextEngine {
        &self.engine
    }

    fn locale(&self, job: &GenerationJob) -> String {
        job.locale.clone().unwrap_or_else(|| self.schema.common.faker_locale.clone())
    }

    fn translate_lang(&self, job: &GenerationJob) -> Option<String> {
        let t = &self.schema.common.translation;
        job.translate
            .clone()
            .or_else(|| t.enable.then(|| t.target_lang_code.clone()))
    }

    fn check_job(&self, job: &GenerationJob) -> Result<(), PipelineError> {
        if job.count == 0 {
            return Err(PipelineError::Config("count must be at least 1".into()));
        }
        if job.instances_per_permutation == 0 {
            return Err(PipelineError::Config("instances per permutation must be at least 1".into()));
        }
        let locale = self.locale(job);
        if !self.registry.supports_locale(&locale) {
            return Err(PipelineError::Config(format!("unsupported locale `{locale}`")));
        }
        Ok(())
    }

    /// Runs every stage for document `index` without touching the disk.
    pub fn produce(&self, job: &GenerationJob, index: usize) -> Result<GeneratedDocument, (PipelineError, u32)> {
        let k = job.instances_per_permutation.max(1) as u64;
        let perm_src = RandomSource::new(job.master_seed, index as u64 / k);
        let src = RandomSource::new(job.master_seed, index as u64);
        let lang = self.translate_lang(job);
        let opts = InstantiateOptions {
            locale: self.locale(job),
            translation: lang.map(|lang| TranslationTarget {
                lang,
                provider: self.translator.as_ref(),
                mode: job.translation_mode,
            }),
        };
        let s = &self.schema.common.structural;
        let mut attempt = 0;
        loop {
            // Shared permutations stay fixed across retries; only values move.
            let freeze_attempt = if k > 1 { 0 } else { attempt };
            let result = (|| -> Result<_, PipelineError> {
                let perm = freeze_permutation(
                    &self.schema,
                    &self.faces,
                    &mut perm_src.rng_attempt(DOMAIN_FREEZE, freeze_attempt),
                )?;
                let instance = instantiate(
                    &self.schema,
                    &perm,
                    &self.registry,
                    &opts,
                    &mut src.rng_attempt(DOMAIN_VALUES, attempt),
                )?;
                let input = LayoutInput {
                    doc: &instance,
                    engine: &self.engine,
                    structural: s,
                    min_font_size: self.schema.common.font_size.0,
                };
                let plan = plan_layout(&input, job.layout, &mut src.rng_attempt(DOMAIN_LAYOUT, attempt))?;
                Ok((instance, plan))
            })();
            match result {
                Ok((instance, plan)) => {
                    let rendered = render_document(
                        &instance,
                        &plan,
                        &self.engine,
                        s.canvas_width,
                        s.canvas_height,
                        job.export.debug_overlay,
                    );
                    let annotations = annotate::build_annotations(&rendered.entities, &self.schema.common.expected_keys);
                    return Ok(GeneratedDocument {
                        index,
                        instance,
                        plan,
                        rendered,
                        annotations,
                        retries: attempt,
                    });
                }
                Err(PipelineError::Layout(e)) if attempt < MAX_LAYOUT_RETRIES => {
                    log::debug!("document {index}: {e}; retrying");
                    attempt += 1;
                }
                Err(e) => return Err((e, attempt)),
            }
        }
    }

    pub fn file_stem(&self, index: usize) -> String {
        format!("{}_{index:06}", self.schema.doc_type_name)
    }

    fn write_document(&self, job: &GenerationJob, doc: &GeneratedDocument) -> Result<Vec<String>, PipelineError> {
        let stem = self.file_stem(doc.index);
        let mut files = Vec::new();
        let mut put = |ext: &str, bytes: &[u8]| -> Result<(), PipelineError> {
            let name = format!("{stem}.{ext}");
            write_atomic(&job.out_dir.join(&name), bytes)?;
            files.push(name);
            Ok(())
        };
        let png = |img| {
            encode_png(img).map_err(|e| PipelineError::Io {
                path: stem.clone(),
                message: e.to_string(),
            })
        };
        put("png", &png(&doc.rendered.image)?)?;
        put("ann.json", annotate::export_annotation_json(&doc.annotations).as_bytes())?;
        if job.export.iob {
            let tsv = annotate::iob_to_tsv(&annotate::export_iob(&doc.annotations));
            put("iob.tsv", tsv.as_bytes())?;
        }
        if job.export.kie {
            let kie = annotate::export_kie(&doc.annotations, &self.schema.common.expected_keys);
            put("kie.json", annotate::export_kie_json(&kie).as_bytes())?;
        }
        if job.export.layout {
            let dump = serde_json::to_string_pretty(&doc.plan).expect("plan serializes");
            put("layout.json", dump.as_bytes())?;
        }
        if let Some(dbg) = &doc.rendered.debug_image {
            put("debug.png", &png(dbg)?)?;
        }
        Ok(files)
    }

    /// Generates and writes one document; failures are captured in the record.
    pub fn generate_one(&self, job: &GenerationJob, index: usize) -> DocumentRecord {
        let k = job.instances_per_permutation.max(1) as u64;
        let mut record = DocumentRecord {
            index,
            stream: index as u64,
            permutation_stream: index as u64 / k,
            fingerprint: None,
            value_digest: None,
            files: Vec::new(),
            retries: 0,
            status: RecordStatus::Failed,
            error: None,
            provenance: None,
        };
        match self.produce(job, index) {
            Ok(doc) => {
                record.retries = doc.retries;
                record.fingerprint = Some(doc.instance.permutation.fingerprint());
                record.value_digest = Some(doc.instance.value_digest());
                record.provenance = Some(Provenance::of(&doc.instance));
                match self.write_document(job, &doc) {
                    Ok(files) => {
                        record.files = files;
                        record.status = if doc.retries == 0 {
                            RecordStatus::Ok
                        } else {
                            RecordStatus::Regenerated
                        };
                    }
                    Err(e) => record.error = Some(e.to_string()),
                }
            }
            Err((e, retries)) => {
                log::warn!("document {index} failed: {e}");
                record.retries = retries;
                record.error = Some(e.to_string());
            }
        }
        record
    }

    /// Generates the whole batch and writes `manifest.json`. The manifest is
    /// written even when too many documents fail.
    pub fn generate_batch(&self, job: &GenerationJob) -> Result<Manifest, PipelineError> {
        self.check_job(job)?;
        fs::create_dir_all(&job.out_dir).map_err(|e| io_err(&job.out_dir, e))?;
        let pool = rayon::ThreadPoolBuilder::new()
            .num_threads(job.workers.max(1))
            .build()
            .map_err(|e| PipelineError::Config(e.to_string()))?;
        let records: Vec<DocumentRecord> = pool.install(|| {
            use rayon::prelude::*;
            (0..job.count)
                .into_par_iter()
                .map(|i| self.generate_one(job, i))
                .collect()
        });
        let manifest = self.manifest(job, records);
        let text = serde_json::to_string_pretty(&manifest).expect("manifest serializes");
        write_atomic(&job.out_dir.join(MANIFEST_FILE), text.as_bytes())?;
        if manifest.failed as f64 > MAX_FAILURE_RATE * manifest.count as f64 {
            return Err(PipelineError::FailureRate {
                failed: manifest.failed,
                count: manifest.count,
                manifest: Box::new(manifest),
            });
        }
        Ok(manifest)
    }

    fn manifest(&self, job: &GenerationJob, records: Vec<DocumentRecord>) -> Manifest {
        let count_of = |s| records.iter().filter(|r| r.status == s).count();
        let fingerprints: Vec<&String> = records.iter().filter_map(|r| r.fingerprint.as_ref()).collect();
        let distinct: BTreeSet<&String> = fingerprints.iter().copied().collect();
        let s = &self.schema.common.structural;
        Manifest {
            schema_digest: self.schema.digest(),
            master_seed: job.master_seed,
            layout_mode: job.layout,
            doc_type: self.schema.doc_type_name.clone(),
            canvas_width: s.canvas_width,
            canvas_height: s.canvas_height,
            expected_keys: self.schema.common.expected_keys.clone(),
            locale: self.locale(job),
            translate: self.translate_lang(job),
            instances_per_permutation: job.instances_per_permutation,
            count: records.len(),
            ok: count_of(RecordStatus::Ok),
            regenerated: count_of(RecordStatus::Regenerated),
            failed: count_of(RecordStatus::Failed),
            uniqueness_ratio: if fingerprints.is_empty() {
                0.0
            } else {
                distinct.len() as f64 / fingerprints.len() as f64
            },
            records,
        }
    }
}

fn io_err(path: &Path, e: std::io::Error) -> PipelineError {
    PipelineError::Io {
        path: path.display().to_string(),
        message: e.to_string(),
    }
}

/// Writes through a sibling temp file and a rename, so readers never see a
/// partial file.
pub fn write_atomic(path: &Path, bytes: &[u8]) -> Result<(), PipelineError> {
    let mut tmp = path.as_os_str().to_owned();
    tmp.push(".part");
    let tmp = PathBuf::from(tmp);
    let mut f = fs::File::create(&tmp).map_err(|e| io_err(&tmp, e))?;
    f.write_all(bytes).map_err(|e| io_err(&tmp, e))?;
    drop(f);
    fs::rename(&tmp, path).map_err(|e| io_err(path, e))
}

pub fn read_manifest(dir: &Path) -> Result<Manifest, PipelineError> {
    let path = dir.join(MANIFEST_FILE);
    let text = fs::read_to_string(&path).map_err(|e| io_err(&path, e))?;
    serde_json::from_str(&text).map_err(|e| PipelineError::Io {
        path: path.display().to_string(),
        message: e.to_string(),
    })
}
