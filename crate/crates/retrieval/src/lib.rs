//! Local corpus of (description, script) pairs with hybrid retrieval.
//!
//! Each entry is scored by a clamped embedding cosine and by BM25 over its
//! description; the two are mixed as `lambda * vec + (1 - lambda) * full`.

mod bm25;

pub use bm25::{Bm25Stats, BM25_B, BM25_K1};

use seekcad_clients::{cosine, tokenize, EmbeddingClient};
use serde::{Deserialize, Serialize};
use std::collections::BTreeSet;
use std::path::Path;
use thiserror::Error;

pub const DEFAULT_K: usize = 3;
pub const DEFAULT_LAMBDA: f64 = 0.3;
/// Full-text candidates kept for min-max normalization.
pub const FULL_TEXT_POOL: usize = 64;

pub const INDEX_FILE: &str = "index.json";

#[derive(Debug, Error)]
pub enum RetrievalError {
    #[error("duplicate entry id {0:?}")]
    DuplicateId(String),
    #[error("invalid entry {id:?}: {reason}")]
    InvalidEntry { id: String, reason: String },
    #[error("index is empty")]
    EmptyIndex,
    #[error("embedder failed: {0}")]
    EmbedderFailure(String),
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),
    #[error("corpus line {line}: {message}")]
    Corpus { line: usize, message: String },
    #[error("index was built with embedder {built:?}, not {given:?}")]
    EmbedderMismatch { built: String, given: String },
    #[error("i/o: {0}")]
    Io(String),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CorpusEntry {
    pub entry_id: String,
    pub description: String,
    pub code: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub embedding: Option<Vec<f64>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub thumb: Option<String>,
}

impl CorpusEntry {
    pub fn new(id: impl Into<String>, description: impl Into<String>, code: impl Into<String>) -> Self {
        CorpusEntry {
            entry_id: id.into(),
            description: description.into(),
            code: code.into(),
            embedding: None,
            thumb: None,
        }
    }
}

/// Parses a JSON-lines corpus; blank lines are skipped.
pub fn read_corpus(text: &str) -> Result<Vec<CorpusEntry>, RetrievalError> {
    text.lines()
        .enumerate()
        .filter(|(_, l)| !l.trim().is_empty())
        .map(|(i, l)| {
            serde_json::from_str(l).map_err(|e| RetrievalError::Corpus {
                line: i + 1,
                message: e.to_string(),
            })
        })
        .collect()
}

pub fn load_corpus(path: &Path) -> Result<Vec<CorpusEntry>, RetrievalError> {
    read_corpus(&std::fs::read_to_string(path).map_err(|e| RetrievalError::Io(format!("{}: {e}", path.display())))?)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RetrievalHit {
    pub entry: CorpusEntry,
    pub g_vec: f64,
    pub g_full: f64,
    pub g_final: f64,
}

/// Entries sorted by id, each with an embedding, plus BM25 statistics.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CorpusIndex {
    pub embedder: String,
    pub dimension: usize,
    pub entries: Vec<CorpusEntry>,
    pub stats: Bm25Stats,
}

impl CorpusIndex {
    pub fn empty(embedder: &dyn EmbeddingClient) -> Self {
        CorpusIndex {
            embedder: embedder.name(),
            dimension: embedder.dimension(),
            entries: Vec::new(),
            stats: Bm25Stats::default(),
        }
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn get(&self, id: &str) -> Option<&CorpusEntry> {
        self.entries
            .binary_search_by(|e| e.entry_id.as_str().cmp(id))
            .ok()
            .map(|i| &self.entries[i])
    }

    /// Adds or replaces entries by id. Entries whose embedding cannot be
    /// produced are skipped with a warning; their ids are returned.
    pub fn ingest(
        &mut self,
        entries: Vec<CorpusEntry>,
        embedder: &dyn EmbeddingClient,
    ) -> Result<Vec<String>, RetrievalError> {
        self.check_embedder(embedder)?;
        let mut seen = BTreeSet::new();
        for e in &entries {
            if !seen.insert(e.entry_id.as_str()) {
                return Err(RetrievalError::DuplicateId(e.entry_id.clone()));
            }
            let invalid = |reason: &str| RetrievalError::InvalidEntry {
                id: e.entry_id.clone(),
                reason: reason.into(),
            };
            if e.entry_id.trim().is_empty() {
                return Err(invalid("empty id"));
            }
            if e.description.trim().is_empty() {
                return Err(invalid("empty description"));
            }
            if e.code.trim().is_empty() {
                return Err(invalid("empty code"));
            }
        }
        let mut skipped = Vec::new();
        for mut e in entries {
            let usable = e.embedding.as_ref().is_some_and(|v| v.len() == self.dimension && v.iter().all(|x| x.is_finite()));
            if !usable {
                match embedder.embed_text(&e.description) {
                    Ok(v) if v.len() == self.dimension => e.embedding = Some(v),
                    Ok(v) => {
                        log::warn!("skipping {}: embedding has {} dimensions, expected {}", e.entry_id, v.len(), self.dimension);
                        skipped.push(e.entry_id);
                        continue;
                    }
                    Err(err) => {
                        log::warn!("skipping {}: {err}", e.entry_id);
                        skipped.push(e.entry_id);
                        continue;
                    }
                }
            }
            match self.entries.binary_search_by(|x| x.entry_id.cmp(&e.entry_id)) {
                Ok(i) => self.entries[i] = e,
                Err(i) => self.entries.insert(i, e),
            }
        }
        self.stats = Bm25Stats::build(self.entries.iter().map(|e| tokenize(&e.description)));
        Ok(skipped)
    }

    fn check_embedder(&self, embedder: &dyn EmbeddingClient) -> Result<(), RetrievalError> {
        if embedder.name() != self.embedder || embedder.dimension() != self.dimension {
            return Err(RetrievalError::EmbedderMismatch {
                built: format!("{} ({})", self.embedder, self.dimension),
                given: format!("{} ({})", embedder.name(), embedder.dimension()),
            });
        }
        Ok(())
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("index serializes")
    }

    /// Writes `index.json` under `dir`.
    pub fn save(&self, dir: &Path) -> Result<(), RetrievalError> {
        let io = |e: std::io::Error| RetrievalError::Io(e.to_string());
        std::fs::create_dir_all(dir).map_err(io)?;
        let tmp = dir.join(format!("{INDEX_FILE}.tmp"));
        std::fs::write(&tmp, self.to_json()).map_err(io)?;
        std::fs::rename(tmp, dir.join(INDEX_FILE)).map_err(io)
    }

    pub fn load(dir: &Path) -> Result<CorpusIndex, RetrievalError> {
        let path = dir.join(INDEX_FILE);
        let text = std::fs::read_to_string(&path).map_err(|e| RetrievalError::Io(format!("{}: {e}", path.display())))?;
        serde_json::from_str(&text).map_err(|e| RetrievalError::Io(format!("{}: {e}", path.display())))
    }

    /// Ranks every entry and returns the best `k`.
    pub fn hybrid_search(
        &self,
        query: &str,
        k: usize,
        lambda: f64,
        embedder: &dyn EmbeddingClient,
    ) -> Result<Vec<RetrievalHit>, RetrievalError> {
        if self.entries.is_empty() {
            return Err(RetrievalError::EmptyIndex);
        }
        if !(0.0..=1.0).contains(&lambda) {
            return Err(RetrievalError::InvalidParameter(format!("lambda {lambda} outside [0, 1]")));
        }
        self.check_embedder(embedder)?;
        let q = embedder
            .embed_text(query)
            .map_err(|e| RetrievalError::EmbedderFailure(e.to_string()))?;
        let full = normalized_full_text(&self.stats.scores(&tokenize(query)));
        let mut hits: Vec<RetrievalHit> = self
            .entries
            .iter()
            .zip(full)
            .map(|(e, g_full)| {
                let g_vec = cosine(&q, e.embedding.as_deref().unwrap_or(&[])).clamp(0.0, 1.0);
                RetrievalHit {
                    entry: e.clone(),
                    g_vec,
                    g_full,
                    g_final: mix(lambda, g_vec, g_full),
                }
            })
            .collect();
        hits.sort_by(|a, b| b.g_final.total_cmp(&a.g_final).then_with(|| a.entry.entry_id.cmp(&b.entry.entry_id)));
        hits.truncate(k);
        Ok(hits)
    }
}

pub fn mix(lambda: f64, g_vec: f64, g_full: f64) -> f64 {
    lambda * g_vec + (1.0 - lambda) * g_full
}

/// Min-max scales the top [`FULL_TEXT_POOL`] raw scores into [0, 1];
/// everything outside the pool scores 0. A pool of equal positive scores
/// maps to 1.
pub fn normalized_full_text(raw: &[f64]) -> Vec<f64> {
    let mut order: Vec<usize> = (0..raw.len()).collect();
    order.sort_by(|&a, &b| raw[b].total_cmp(&raw[a]).then(a.cmp(&b)));
    order.truncate(FULL_TEXT_POOL);
    let hi = order.first().map_or(0.0, |&i| raw[i]);
    let lo = order.last().map_or(0.0, |&i| raw[i]);
    let mut out = vec![0.0; raw.len()];
    if hi <= 0.0 {
        return out;
    }
    for &i in &order {
        out[i] = if hi > lo { (raw[i] - lo) / (hi - lo) } else { 1.0 };
    }
    out
}

/// Prompt body: the query followed by one description/code chunk per hit.
pub fn build_chunks(query: &str, hits: &[RetrievalHit]) -> String {
    let mut out = format!("Query: {}\n", query.trim());
    for h in hits {
        out.push_str(&format!(
            "\nDescription: {}\nCAD code: {}\n",
            h.entry.description.trim(),
            h.entry.code.trim_end()
        ));
    }
    out
}
