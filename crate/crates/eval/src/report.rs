//! Batch reports: `eval-report.json` and its CSV export.

use crate::{pass_at_k, EvalError, MetricReport};
use serde::{Deserialize, Serialize};
use std::path::Path;

pub const CSV_HEADER: [&str; 6] = ["id", "CD", "HD", "IoGT", "G-Score", "Novel"];

/// One attempt at generating a model for a description.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GenerationResult {
    pub compiled: bool,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub error: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub metrics: Option<MetricReport>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ItemReport {
    pub id: String,
    pub description: String,
    pub generations: Vec<GenerationResult>,
}

impl ItemReport {
    pub fn summary(&self) -> Aggregate {
        summarize(std::slice::from_ref(self).iter())
    }
}

/// Means over compiled generations only; `None` when nothing compiled.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct Aggregate {
    pub generations: usize,
    pub compiled: usize,
    pub cd: Option<f64>,
    pub hd: Option<f64>,
    pub iogt: Option<f64>,
    pub g_score: Option<f64>,
    /// Share of scored generations judged novel.
    pub novel: Option<f64>,
    pub pass_at_k: Option<f64>,
}

fn mean_of(values: impl Iterator<Item = f64>) -> Option<f64> {
    let (sum, n) = values.fold((0.0, 0usize), |(s, n), v| (s + v, n + 1));
    (n > 0).then(|| sum / n as f64)
}

fn summarize<'a>(items: impl Iterator<Item = &'a ItemReport> + Clone) -> Aggregate {
    let gens = items.clone().flat_map(|i| &i.generations);
    let scored: Vec<&MetricReport> = gens.clone().filter(|g| g.compiled).filter_map(|g| g.metrics.as_ref()).collect();
    Aggregate {
        generations: gens.clone().count(),
        compiled: gens.filter(|g| g.compiled).count(),
        cd: mean_of(scored.iter().map(|m| m.cd)),
        hd: mean_of(scored.iter().map(|m| m.hd)),
        iogt: mean_of(scored.iter().map(|m| m.iogt)),
        g_score: mean_of(scored.iter().filter_map(|m| m.g_score)),
        novel: mean_of(scored.iter().filter_map(|m| m.novel.map(|b| if b { 1.0 } else { 0.0 }))),
        pass_at_k: None,
    }
}

pub fn aggregate(items: &[ItemReport]) -> Result<Aggregate, EvalError> {
    let mut agg = summarize(items.iter());
    if !items.is_empty() {
        let outcomes: Vec<Vec<bool>> = items.iter().map(|i| i.generations.iter().map(|g| g.compiled).collect()).collect();
        agg.pass_at_k = Some(pass_at_k(&outcomes)?);
    }
    Ok(agg)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvalReport {
    pub k: usize,
    pub items: Vec<ItemReport>,
    pub aggregate: Aggregate,
}

impl EvalReport {
    pub fn new(k: usize, items: Vec<ItemReport>) -> Result<EvalReport, EvalError> {
        if k == 0 || items.iter().any(|i| i.generations.len() != k) {
            return Err(EvalError::RaggedInput);
        }
        let aggregate = aggregate(&items)?;
        Ok(EvalReport { k, items, aggregate })
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("report serializes")
    }

    pub fn from_json(text: &str) -> Result<EvalReport, EvalError> {
        serde_json::from_str(text).map_err(|e| EvalError::Io(e.to_string()))
    }

    /// One row per item plus a final `mean` row; empty cells mean no data.
    pub fn to_csv(&self) -> Result<String, EvalError> {
        let io = |e: csv::Error| EvalError::Io(e.to_string());
        let mut w = csv::Writer::from_writer(Vec::new());
        w.write_record(CSV_HEADER).map_err(io)?;
        let cell = |v: Option<f64>| v.map(|x| format!("{x:.6}")).unwrap_or_default();
        let rows = self.items.iter().map(|i| (i.id.clone(), i.summary())).chain([("mean".to_string(), self.aggregate.clone())]);
        for (id, a) in rows {
            w.write_record([id, cell(a.cd), cell(a.hd), cell(a.iogt), cell(a.g_score), cell(a.novel)])
                .map_err(io)?;
        }
        let bytes = w.into_inner().map_err(|e| EvalError::Io(e.to_string()))?;
        Ok(String::from_utf8(bytes).expect("csv is utf-8"))
    }

    /// Writes `eval-report.json` and `eval-report.csv` into `dir`.
    pub fn write(&self, dir: &Path) -> Result<(), EvalError> {
        let io = |e: std::io::Error| EvalError::Io(e.to_string());
        std::fs::create_dir_all(dir).map_err(io)?;
        std::fs::write(dir.join("eval-report.json"), self.to_json()).map_err(io)?;
        std::fs::write(dir.join("eval-report.csv"), self.to_csv()?).map_err(io)?;
        Ok(())
    }
}
