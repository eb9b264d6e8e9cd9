//! Metrics for comparing generated CAD models against references.

mod kdtree;
mod report;
mod score;
mod voxel;

pub use kdtree::{dist2, KdTree, P3};
pub use report::{aggregate, Aggregate, EvalReport, GenerationResult, ItemReport, CSV_HEADER};
pub use score::{g_score, g_score_prompt, parse_score};
pub use voxel::{iogt, voxelize, VoxelGrid};

use seekcad_clients::{cosine, ClientError, ImageEmbedder};
use seekcad_core::kernel::{sample_surface, LabeledMesh};
use seekcad_render::Raster;
use serde::{Deserialize, Serialize};
use thiserror::Error;

pub const DEFAULT_POINTS: usize = 2000;
pub const DEFAULT_SEED: u64 = 2024;
pub const DEFAULT_RESOLUTION: usize = 64;
pub const DEFAULT_TAU: f64 = 0.8;
pub const DEFAULT_RHO: f64 = 0.8;

#[derive(Debug, Error)]
pub enum EvalError {
    #[error("point cloud is empty")]
    EmptyCloud,
    #[error("{0} mesh is not watertight")]
    NotWatertight(&'static str),
    #[error("ground truth has no volume")]
    EmptyGT,
    #[error("outcome lists must be non-empty and share one length k >= 1")]
    RaggedInput,
    #[error("novelty needs a non-empty reference corpus")]
    EmptyCorpus,
    #[error("embedder failed: {0}")]
    EmbedderFailure(String),
    #[error("vision model unavailable: {0}")]
    VlmUnavailable(String),
    #[error("no score in [1,5] found in reply {0:?}")]
    UnparseableScore(String),
    #[error("sampling failed: {0}")]
    Sampling(String),
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),
    #[error("report i/o: {0}")]
    Io(String),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PointCloud {
    pub points: Vec<P3>,
    pub seed: u64,
    pub source_doc: String,
}

impl PointCloud {
    /// Little-endian dump of all coordinates, for byte-level comparisons.
    pub fn to_bytes(&self) -> Vec<u8> {
        self.points.iter().flatten().flat_map(|c| c.to_le_bytes()).collect()
    }

    /// Translates the centroid to the origin and scales the bounding-box
    /// diagonal to 1. A single-point cloud is only translated.
    pub fn normalized(&self) -> PointCloud {
        let n = self.points.len().max(1) as f64;
        let mut c = [0.0; 3];
        for p in &self.points {
            for i in 0..3 {
                c[i] += p[i];
            }
        }
        c.iter_mut().for_each(|v| *v /= n);
        let mut lo = [f64::INFINITY; 3];
        let mut hi = [f64::NEG_INFINITY; 3];
        for p in &self.points {
            for i in 0..3 {
                lo[i] = lo[i].min(p[i]);
                hi[i] = hi[i].max(p[i]);
            }
        }
        let diag = dist2(&lo, &hi).sqrt();
        let s = if diag.is_finite() && diag > 0.0 { 1.0 / diag } else { 1.0 };
        PointCloud {
            points: self
                .points
                .iter()
                .map(|p| [(p[0] - c[0]) * s, (p[1] - c[1]) * s, (p[2] - c[2]) * s])
                .collect(),
            seed: self.seed,
            source_doc: self.source_doc.clone(),
        }
    }
}

/// Samples `n` surface points with a fixed seed, unnormalized.
pub fn sample_cloud(mesh: &LabeledMesh, n: usize, seed: u64, source_doc: &str) -> Result<PointCloud, EvalError> {
    let pts = sample_surface(mesh, n, seed).map_err(|e| EvalError::Sampling(e.to_string()))?;
    Ok(PointCloud {
        points: pts.iter().map(|v| [v.x, v.y, v.z]).collect(),
        seed,
        source_doc: source_doc.to_string(),
    })
}

/// Nearest-neighbour distance from every point of `from` into `to`.
fn directed(from: &[P3], to: &[P3]) -> Vec<f64> {
    let tree = KdTree::new(to);
    from.iter().map(|p| tree.nearest_dist2(p).sqrt()).collect()
}

fn mean(v: &[f64]) -> f64 {
    v.iter().sum::<f64>() / v.len() as f64
}

pub fn chamfer(a: &PointCloud, b: &PointCloud) -> Result<f64, EvalError> {
    if a.points.is_empty() || b.points.is_empty() {
        return Err(EvalError::EmptyCloud);
    }
    Ok(0.5 * (mean(&directed(&a.points, &b.points)) + mean(&directed(&b.points, &a.points))))
}

pub fn hausdorff(a: &PointCloud, b: &PointCloud) -> Result<f64, EvalError> {
    if a.points.is_empty() || b.points.is_empty() {
        return Err(EvalError::EmptyCloud);
    }
    let max = |v: Vec<f64>| v.into_iter().fold(0.0, f64::max);
    Ok(max(directed(&a.points, &b.points)).max(max(directed(&b.points, &a.points))))
}

/// Fraction of corpus similarities strictly below `tau`.
pub fn novelty_fraction(gen: &[f64], corpus: &[Vec<f64>], tau: f64) -> Result<f64, EvalError> {
    if corpus.is_empty() {
        return Err(EvalError::EmptyCorpus);
    }
    let below = corpus.iter().filter(|c| cosine(gen, c).clamp(0.0, 1.0) < tau).count();
    Ok(below as f64 / corpus.len() as f64)
}

pub fn novel_from_embeddings(gen: &[f64], corpus: &[Vec<f64>], tau: f64, rho: f64) -> Result<bool, EvalError> {
    Ok(novelty_fraction(gen, corpus, tau)? >= rho)
}

pub fn novel(
    gen_image: &Raster,
    corpus_images: &[Raster],
    embedder: &dyn ImageEmbedder,
    tau: f64,
    rho: f64,
) -> Result<bool, EvalError> {
    if corpus_images.is_empty() {
        return Err(EvalError::EmptyCorpus);
    }
    let embed = |img: &Raster| embedder.embed_image(img).map_err(|e: ClientError| EvalError::EmbedderFailure(e.to_string()));
    let gen = embed(gen_image)?;
    let corpus = corpus_images.iter().map(embed).collect::<Result<Vec<_>, _>>()?;
    novel_from_embeddings(&gen, &corpus, tau, rho)
}

pub fn pass_at_k(outcomes: &[Vec<bool>]) -> Result<f64, EvalError> {
    let k = outcomes.first().map_or(0, Vec::len);
    if k == 0 || outcomes.iter().any(|o| o.len() != k) {
        return Err(EvalError::RaggedInput);
    }
    let hits = outcomes.iter().filter(|o| o.iter().any(|&s| s)).count();
    Ok(hits as f64 / outcomes.len() as f64)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EvalConfig {
    pub points: usize,
    pub seed: u64,
    pub resolution: usize,
}

impl Default for EvalConfig {
    fn default() -> Self {
        EvalConfig {
            points: DEFAULT_POINTS,
            seed: DEFAULT_SEED,
            resolution: DEFAULT_RESOLUTION,
        }
    }
}

/// Geometric scores of one generated mesh against its reference.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MetricReport {
    pub cd: f64,
    pub hd: f64,
    pub iogt: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub g_score: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub novel: Option<bool>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub pass_at_k: Option<f64>,
}

pub fn compare(gt: &LabeledMesh, gen: &LabeledMesh, cfg: &EvalConfig) -> Result<MetricReport, EvalError> {
    if cfg.points == 0 {
        return Err(EvalError::InvalidParameter("points must be positive".into()));
    }
    let a = sample_cloud(gt, cfg.points, cfg.seed, "gt")?.normalized();
    let b = sample_cloud(gen, cfg.points, cfg.seed, "gen")?.normalized();
    Ok(MetricReport {
        cd: chamfer(&a, &b)?,
        hd: hausdorff(&a, &b)?,
        iogt: iogt(gt, gen, cfg.resolution)?,
        g_score: None,
        novel: None,
        pass_at_k: None,
    })
}
