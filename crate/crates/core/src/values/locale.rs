//! Per-locale word lists and formatting rules.
//!
//! A locale is a directory of plain-text lists (one entry per line) plus a
//! `meta.txt` of `key=value` formatting rules. `en` and `es` are compiled in;
//! further locales load from a data directory laid out as `<root>/<tag>/*.txt`.

use std::collections::BTreeMap;
use std::fs;
use std::path::Path;
use std::sync::Arc;

use super::ValueError;

/// List names every locale must provide.
pub const REQUIRED_LISTS: &[&str] = &[
    "first_names",
    "last_names",
    "company_words",
    "company_suffixes",
    "streets",
    "street_types",
    "units",
    "cities",
    "regions",
    "countries",
    "words",
    "email_domains",
    "months",
];

macro_rules! embedded_locale {
    ($tag:literal) => {
        [
            ("first_names", include_str!(concat!("../../data/locales/", $tag, "/first_names.txt"))),
            ("last_names", include_str!(concat!("../../data/locales/", $tag, "/last_names.txt"))),
            ("company_words", include_str!(concat!("../../data/locales/", $tag, "/company_words.txt"))),
            ("company_suffixes", include_str!(concat!("../../data/locales/", $tag, "/company_suffixes.txt"))),
            ("streets", include_str!(concat!("../../data/locales/", $tag, "/streets.txt"))),
            ("street_types", include_str!(concat!("../../data/locales/", $tag, "/street_types.txt"))),
            ("units", include_str!(concat!("../../data/locales/", $tag, "/units.txt"))),
            ("cities", include_str!(concat!("../../data/locales/", $tag, "/cities.txt"))),
            ("regions", include_str!(concat!("../../data/locales/", $tag, "/regions.txt"))),
            ("countries", include_str!(concat!("../../data/locales/", $tag, "/countries.txt"))),
            ("words", include_str!(concat!("../../data/locales/", $tag, "/words.txt"))),
            ("email_domains", include_str!(concat!("../../data/locales/", $tag, "/email_domains.txt"))),
            ("months", include_str!(concat!("../../data/locales/", $tag, "/months.txt"))),
            ("meta", include_str!(concat!("../../data/locales/", $tag, "/meta.txt"))),
        ]
    };
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct LocaleData {
    pub tag: String,
    lists: BTreeMap<String, Vec<String>>,
    meta: BTreeMap<String, String>,
}

fn parse_lines(text: &str) -> impl Iterator<Item = &str> {
    text.lines()
        .map(str::trim)
        .filter(|l| !l.is_empty() && !l.starts_with('#'))
}

impl LocaleData {
    /// Builds a locale from `(list name, file contents)` pairs; `meta` holds
    /// the formatting rules.
    pub fn from_sources<'a>(
        tag: &str,
        sources: impl IntoIterator<Item = (&'a str, &'a str)>,
    ) -> Result<Self, ValueError> {
        let mut lists = BTreeMap::new();
        let mut meta = BTreeMap::new();
        for (name, text) in sources {
            if name == "meta" {
                for line in parse_lines(text) {
                    let (k, v) = line.split_once('=').ok_or_else(|| {
                        ValueError::LocaleData(format!("{tag}/meta.txt: `{line}` is not key=value"))
                    })?;
                    meta.insert(k.trim().to_string(), v.trim().to_string());
                }
            } else {
                lists.insert(
                    name.to_string(),
                    parse_lines(text).map(str::to_string).collect(),
                );
            }
        }
        for required in REQUIRED_LISTS {
            if lists.get(*required).is_none_or(|l: &Vec<String>| l.is_empty()) {
                return Err(ValueError::LocaleData(format!(
                    "locale `{tag}` is missing list `{required}`"
                )));
            }
        }
        Ok(Self {
            tag: tag.to_string(),
            lists,
            meta,
        })
    }

    pub fn from_dir(tag: &str, dir: &Path) -> Result<Self, ValueError> {
        let mut files = Vec::new();
        let entries = fs::read_dir(dir)
            .map_err(|e| ValueError::LocaleData(format!("{}: {e}", dir.display())))?;
        for entry in entries {
            let path = entry
                .map_err(|e| ValueError::LocaleData(e.to_string()))?
                .path();
            if path.extension().and_then(|e| e.to_str()) != Some("txt") {
                continue;
            }
            let name = path
                .file_stem()
                .and_then(|s| s.to_str())
                .unwrap_or_default()
                .to_string();
            let text = fs::read_to_string(&path)
                .map_err(|e| ValueError::LocaleData(format!("{}: {e}", path.display())))?;
            files.push((name, text));
        }
        Self::from_sources(tag, files.iter().map(|(n, t)| (n.as_str(), t.as_str())))
    }

    pub fn list(&self, name: &str) -> &[String] {
        self.lists.get(name).map(Vec::as_slice).unwrap_or(&[])
    }

    pub fn meta(&self, key: &str) -> Option<&str> {
        self.meta.get(key).map(String::as_str)
    }

    /// `|`-separated alternatives stored under a meta key.
    pub fn meta_options(&self, key: &str) -> Vec<&str> {
        self.meta(key)
            .map(|v| v.split('|').map(str::trim).filter(|s| !s.is_empty()).collect())
            .unwrap_or_default()
    }

    /// Whether `text` occurs in any of this locale's lists.
    pub fn contains_entry(&self, text: &str) -> bool {
        self.lists.values().any(|l| l.iter().any(|e| e == text))
    }
}

#[derive(Debug, Clone, Default)]
pub struct LocaleCatalog {
    locales: BTreeMap<String, Arc<LocaleData>>,
}

impl LocaleCatalog {
    pub fn builtin() -> Self {
        let mut catalog = Self::default();
        for (tag, sources) in [("en", embedded_locale!("en")), ("es", embedded_locale!("es"))] {
            let data = LocaleData::from_sources(tag, sources).expect("bundled locale data is valid");
            catalog.insert(data);
        }
        catalog
    }

    pub fn insert(&mut self, data: LocaleData) {
        self.locales.insert(data.tag.clone(), Arc::new(data));
    }

    /// Loads every `<root>/<tag>/` directory as a locale.
    pub fn load_dir(&mut self, root: &Path) -> Result<(), ValueError> {
        let entries = fs::read_dir(root)
            .map_err(|e| ValueError::LocaleData(format!("{}: {e}", root.display())))?;
        for entry in entries {
            let path = entry.map_err(|e| ValueError::LocaleData(e.to_string()))?.path();
            if path.is_dir() {
                let tag = path.file_name().and_then(|s| s.to_str()).unwrap_or_default();
                let data = LocaleData::from_dir(tag, &path)?;
                self.insert(data);
            }
        }
        Ok(())
    }

    /// Exact tag, then the language subtag (`es_ES` and `es-MX` resolve to `es`).
    pub fn resolve(&self, tag: &str) -> Option<&Arc<LocaleData>> {
        self.locales.get(tag).or_else(|| {
            let lang = tag.split(['_', '-']).next()?;
            self.locales.get(&lang.to_ascii_lowercase())
        })
    }

    pub fn tags(&self) -> impl Iterator<Item = &str> {
        self.locales.keys().map(String::as_str)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn builtin_locales_load() {
        let catalog = LocaleCatalog::builtin();
        assert_eq!(catalog.tags().collect::<Vec<_>>(), vec!["en", "es"]);
        let es = catalog.resolve("es_ES").unwrap();
        assert_eq!(es.tag, "es");
        assert_eq!(es.meta("currency_symbol"), Some("€"));
        assert!(es.list("first_names").iter().any(|n| n == "Lucía"));
        assert!(catalog.resolve("en-US").is_some());
        assert!(catalog.resolve("pt").is_none());
    }

    #[test]
    fn missing_list_is_rejected() {
        let err = LocaleData::from_sources("xx", [("first_names", "A\nB")]).unwrap_err();
        assert!(err.to_string().contains("last_names"));
    }

    #[test]
    fn locale_dir_round_trip() {
        let dir = tempfile::tempdir().unwrap();
        let loc = dir.path().join("pt");
        fs::create_dir(&loc).unwrap();
        for name in REQUIRED_LISTS {
            fs::write(loc.join(format!("{name}.txt")), "# comment\nalpha\n\nbeta\n").unwrap();
        }
        fs::write(loc.join("meta.txt"), "currency_symbol=R$\n").unwrap();
        let mut catalog = LocaleCatalog::default();
        catalog.load_dir(dir.path()).unwrap();
        let pt = catalog.resolve("pt_BR").unwrap();
        assert_eq!(pt.list("words"), ["alpha", "beta"]);
        assert_eq!(pt.meta("currency_symbol"), Some("R$"));
    }
}
