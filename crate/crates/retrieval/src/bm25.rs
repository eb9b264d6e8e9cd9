use serde::{Deserialize, Serialize};
use std::collections::{BTreeMap, BTreeSet};

pub const BM25_K1: f64 = 1.2;
pub const BM25_B: f64 = 0.75;

/// Term statistics over tokenized documents, in index order.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct Bm25Stats {
    pub doc_freq: BTreeMap<String, usize>,
    pub term_freqs: Vec<BTreeMap<String, usize>>,
    pub doc_lens: Vec<usize>,
}

impl Bm25Stats {
    pub fn build(docs: impl Iterator<Item = Vec<String>>) -> Self {
        let mut s = Bm25Stats::default();
        for tokens in docs {
            let mut tf = BTreeMap::new();
            for t in &tokens {
                *tf.entry(t.clone()).or_insert(0) += 1;
            }
            for t in tf.keys() {
                *s.doc_freq.entry(t.clone()).or_insert(0) += 1;
            }
            s.doc_lens.push(tokens.len());
            s.term_freqs.push(tf);
        }
        s
    }

    pub fn avg_len(&self) -> f64 {
        if self.doc_lens.is_empty() {
            0.0
        } else {
            self.doc_lens.iter().sum::<usize>() as f64 / self.doc_lens.len() as f64
        }
    }

    /// Non-negative inverse document frequency.
    pub fn idf(&self, term: &str) -> f64 {
        let n = self.doc_lens.len() as f64;
        let df = self.doc_freq.get(term).copied().unwrap_or(0) as f64;
        ((n - df + 0.5) / (df + 0.5) + 1.0).ln()
    }

    /// BM25 of every document against the distinct query terms.
    pub fn scores(&self, query: &[String]) -> Vec<f64> {
        let terms: BTreeSet<&String> = query.iter().collect();
        let avg = self.avg_len().max(1e-12);
        self.term_freqs
            .iter()
            .zip(&self.doc_lens)
            .map(|(tf, &len)| {
                terms
                    .iter()
                    .filter_map(|t| {
                        let f = *tf.get(*t)? as f64;
                        let norm = BM25_K1 * (1.0 - BM25_B + BM25_B * len as f64 / avg);
                        Some(self.idf(t) * f * (BM25_K1 + 1.0) / (f + norm))
                    })
                    .sum()
            })
            .collect()
    }
}
