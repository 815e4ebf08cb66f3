//! Dataset diversity as the mean pairwise cosine similarity (MPCS) of
//! per-document embeddings. Lower means more diverse.

use serde::Serialize;
use thiserror::Error;

use crate::annotate::{Annotation, OTHER_CLASS};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum DiversityError {
    #[error("vector dimensions differ ({0} vs {1})")]
    DimensionMismatch(usize, usize),
    #[error("zero-norm vector")]
    ZeroNorm,
    #[error("need at least 2 vectors, got {0}")]
    TooFew(usize),
    #[error("non-finite vector entry")]
    NonFinite,
    #[error("document has no tokens to embed")]
    NoTokens,
    #[error("line {line}: {message}")]
    Parse { line: usize, message: String },
}

pub fn cosine_similarity(u: &[f64], v: &[f64]) -> Result<f64, DiversityError> {
    if u.len() != v.len() {
        return Err(DiversityError::DimensionMismatch(u.len(), v.len()));
    }
    let dot: f64 = u.iter().zip(v).map(|(a, b)| a * b).sum();
    let nu = u.iter().map(|a| a * a).sum::<f64>().sqrt();
    let nv = v.iter().map(|a| a * a).sum::<f64>().sqrt();
    if nu == 0.0 || nv == 0.0 {
        return Err(DiversityError::ZeroNorm);
    }
    Ok(dot / (nu * nv))
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DiversityReport {
    pub mean: f64,
    /// Population standard deviation over the same pairs.
    pub std: f64,
    pub n: usize,
    pub dim: usize,
    pub provider: String,
}

impl std::fmt::Display for DiversityReport {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(
            f,
            "MPCS {:.3} ± {:.3} (N={}, d={}, provider={})",
            self.mean, self.std, self.n, self.dim, self.provider
        )
    }
}

/// Mean and spread of cosine similarity over all unordered pairs.
pub fn mpcs(vectors: &[Vec<f64>], provider: &str) -> Result<DiversityReport, DiversityError> {
    let n = vectors.len();
    if n < 2 {
        return Err(DiversityError::TooFew(n));
    }
    if vectors.iter().flatten().any(|x| !x.is_finite()) {
        return Err(DiversityError::NonFinite);
    }
    let mut sims = Vec::with_capacity(n * (n - 1) / 2);
    for i in 0..n {
        for j in i + 1..n {
            sims.push(cosine_similarity(&vectors[i], &vectors[j])?);
        }
    }
    let mean = sims.iter().sum::<f64>() / sims.len() as f64;
    let var = sims.iter().map(|s| (s - mean).powi(2)).sum::<f64>() / sims.len() as f64;
    Ok(DiversityReport {
        mean,
        std: var.sqrt(),
        n,
        dim: vectors[0].len(),
        provider: provider.to_string(),
    })
}

/// Maps one annotated document to a fixed-length vector.
pub trait EmbeddingProvider {
    fn id(&self) -> &str;
    fn dim(&self) -> usize;
    fn embed(&self, annotations: &[Annotation]) -> Result<Vec<f64>, DiversityError>;
}

pub const HISTOGRAM_SIDE: usize = 8;

/// Annotation-derived features: an 8x8 histogram of token centres, class
/// frequencies over the expected keys plus `Other`, and token shape stats
/// (mean length / 16, digit ratio, uppercase ratio).
#[derive(Debug, Clone)]
pub struct LayoutFeatureProvider {
    pub canvas_width: u32,
    pub canvas_height: u32,
    pub expected_keys: Vec<String>,
}

impl EmbeddingProvider for LayoutFeatureProvider {
    fn id(&self) -> &str {
        "layout-features"
    }

    fn dim(&self) -> usize {
        HISTOGRAM_SIDE * HISTOGRAM_SIDE + self.expected_keys.len() + 1 + 3
    }

    fn embed(&self, annotations: &[Annotation]) -> Result<Vec<f64>, DiversityError> {
        let tokens: Vec<_> = annotations.iter().flat_map(|a| &a.children).collect();
        if tokens.is_empty() {
            return Err(DiversityError::NoTokens);
        }
        let side = HISTOGRAM_SIDE as u64;
        let mut v = vec![0.0; self.dim()];
        for t in &tokens {
            let cx = t.rect.x as u64 * 2 + t.rect.w as u64;
            let cy = t.rect.y as u64 * 2 + t.rect.h as u64;
            let col = (cx * side / (2 * self.canvas_width.max(1) as u64)).min(side - 1);
            let row = (cy * side / (2 * self.canvas_height.max(1) as u64)).min(side - 1);
            v[(row * side + col) as usize] += 1.0 / tokens.len() as f64;
        }
        let base = HISTOGRAM_SIDE * HISTOGRAM_SIDE;
        for a in annotations {
            let k = self
                .expected_keys
                .iter()
                .position(|k| k == &a.class && a.class != OTHER_CLASS)
                .unwrap_or(self.expected_keys.len());
            v[base + k] += 1.0 / annotations.len() as f64;
        }
        let shape = base + self.expected_keys.len() + 1;
        let chars: Vec<char> = tokens.iter().flat_map(|t| t.text.chars()).collect();
        let letters = chars.iter().filter(|c| c.is_alphabetic()).count();
        v[shape] = chars.len() as f64 / tokens.len() as f64 / 16.0;
        v[shape + 1] = chars.iter().filter(|c| c.is_ascii_digit()).count() as f64 / chars.len().max(1) as f64;
        v[shape + 2] = chars.iter().filter(|c| c.is_uppercase()).count() as f64 / letters.max(1) as f64;
        Ok(v)
    }
}

/// One vector per non-empty line, entries separated by whitespace or commas;
/// `#` starts a comment.
pub fn parse_vector_file(text: &str) -> Result<Vec<Vec<f64>>, DiversityError> {
    let mut out: Vec<Vec<f64>> = Vec::new();
    for (n, raw) in text.lines().enumerate() {
        let line = raw.split('#').next().unwrap_or_default().trim();
        if line.is_empty() {
            continue;
        }
        let v = line
            .split(|c: char| c.is_whitespace() || c == ',')
            .filter(|s| !s.is_empty())
            .map(|s| {
                s.parse::<f64>().map_err(|e| DiversityError::Parse {
                    line: n + 1,
                    message: format!("`{s}`: {e}"),
                })
            })
            .collect::<Result<Vec<_>, _>>()?;
        if let Some(first) = out.first() {
            if first.len() != v.len() {
                return Err(DiversityError::DimensionMismatch(first.len(), v.len()));
            }
        }
        out.push(v);
    }
    Ok(out)
}
