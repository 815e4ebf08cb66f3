//! Header translation through a pluggable provider.
//!
//! The bundled provider is a lookup table read from two-column TSV files
//! (`source<TAB>target`), one file per target language.

use std::collections::BTreeMap;
use std::fs;
use std::path::Path;

use super::{HeaderText, ValueError};

const ES_DICTIONARY: &str = include_str!("../../data/translations/es.tsv");

/// Maps text into a target language. Must be a pure function of its inputs.
pub trait TranslationProvider: Send + Sync {
    /// `Ok(None)` means the provider has no translation for `text`.
    fn translate(&self, text: &str, target_lang: &str) -> Result<Option<String>, ValueError>;
}

/// What to do when the provider itself errors.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum FailureMode {
    /// Abort the document.
    #[default]
    FailFast,
    /// Keep the source text.
    Lenient,
}

#[derive(Debug, Clone, Default)]
pub struct FixtureDictionary {
    tables: BTreeMap<String, BTreeMap<String, String>>,
}

impl FixtureDictionary {
    /// Dictionaries shipped with the crate (`es`).
    pub fn builtin() -> Self {
        let mut d = Self::default();
        d.add_tsv("es", ES_DICTIONARY)
            .expect("bundled dictionary is valid");
        d
    }

    pub fn add_tsv(&mut self, lang: &str, text: &str) -> Result<(), ValueError> {
        let table = self.tables.entry(lang.to_string()).or_default();
        for (n, line) in text.lines().enumerate() {
            if line.trim().is_empty() || line.starts_with('#') {
                continue;
            }
            let (src, dst) = line.split_once('\t').ok_or_else(|| {
                ValueError::LocaleData(format!("{lang}.tsv line {}: expected two tab-separated columns", n + 1))
            })?;
            table.insert(src.trim().to_string(), dst.trim().to_string());
        }
        Ok(())
    }

    /// Loads every `<lang>.tsv` in `dir`.
    pub fn load_dir(&mut self, dir: &Path) -> Result<(), ValueError> {
        let entries =
            fs::read_dir(dir).map_err(|e| ValueError::LocaleData(format!("{}: {e}", dir.display())))?;
        for entry in entries {
            let path = entry.map_err(|e| ValueError::LocaleData(e.to_string()))?.path();
            if path.extension().and_then(|e| e.to_str()) != Some("tsv") {
                continue;
            }
            let lang = path.file_stem().and_then(|s| s.to_str()).unwrap_or_default().to_string();
            let text = fs::read_to_string(&path)
                .map_err(|e| ValueError::LocaleData(format!("{}: {e}", path.display())))?;
            self.add_tsv(&lang, &text)?;
        }
        Ok(())
    }

    pub fn languages(&self) -> impl Iterator<Item = &str> {
        self.tables.keys().map(String::as_str)
    }

    pub fn supports(&self, lang: &str) -> bool {
        self.table(lang).is_some()
    }

    fn table(&self, lang: &str) -> Option<&BTreeMap<String, String>> {
        self.tables.get(lang).or_else(|| {
            let primary = lang.split(['_', '-']).next()?;
            self.tables.get(&primary.to_ascii_lowercase())
        })
    }
}

impl TranslationProvider for FixtureDictionary {
    fn translate(&self, text: &str, target_lang: &str) -> Result<Option<String>, ValueError> {
        let table = self.table(target_lang).ok_or_else(|| ValueError::Translation {
            text: text.to_string(),
            lang: target_lang.to_string(),
            message: "no dictionary for this language".to_string(),
        })?;
        Ok(table.get(text).cloned())
    }
}

/// Translates one header. Missing entries pass through with a warning;
/// provider errors abort or pass through depending on `mode`.
pub fn translate_text(
    text: &str,
    target_lang: &str,
    provider: &dyn TranslationProvider,
    mode: FailureMode,
) -> Result<HeaderText, ValueError> {
    match provider.translate(text, target_lang) {
        Ok(Some(t)) => Ok(HeaderText {
            source: text.to_string(),
            text: t,
            translated: true,
        }),
        Ok(None) => {
            log::warn!("no `{target_lang}` translation for `{text}`; keeping source text");
            Ok(HeaderText::untranslated(text))
        }
        Err(e) if mode == FailureMode::Lenient => {
            log::warn!("{e}; keeping source text");
            Ok(HeaderText::untranslated(text))
        }
        Err(e) => Err(e),
    }
}
