//! Step-wise renderer: one image per modeling step plus the finished model.
//!
//! Step `k` shows the boolean fold of triplets `0..=k`; triangles produced by
//! triplet `k` are drawn opaque in the highlight color and everything older is
//! blended in at `dim_alpha`. The camera is fitted once to the finished model
//! and shared by every frame.

mod camera;
mod raster;

pub use camera::{Camera, Projected};
pub use raster::Raster;

use seekcad_core::kernel::{compile_steps, CompileError, LabeledMesh, TessellationConfig, V3};
use seekcad_core::model::SsrModelDoc;
use serde::{Deserialize, Serialize};
use std::path::Path;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum RenderError {
    #[error(transparent)]
    Compile(#[from] CompileError),
    #[error("nothing visible to render")]
    EmptyModel,
    #[error("invalid render config: {0}")]
    InvalidConfig(String),
    #[error("png: {0}")]
    Png(String),
    #[error("render index: {0}")]
    Index(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RenderConfig {
    pub width: u32,
    pub height: u32,
    pub highlight_color: [u8; 3],
    pub neutral_color: [u8; 3],
    pub background: [u8; 3],
    pub dim_alpha: f64,
    pub tessellation: TessellationConfig,
}

impl Default for RenderConfig {
    fn default() -> Self {
        RenderConfig {
            width: 512,
            height: 512,
            highlight_color: [255, 96, 0],
            neutral_color: [170, 176, 190],
            background: [255, 255, 255],
            dim_alpha: 0.25,
            tessellation: TessellationConfig::default(),
        }
    }
}

impl RenderConfig {
    pub fn check(&self) -> Result<(), RenderError> {
        if !(self.dim_alpha > 0.0 && self.dim_alpha < 1.0) {
            return Err(RenderError::InvalidConfig(format!("dim_alpha {} not in (0, 1)", self.dim_alpha)));
        }
        if self.width < 64 || self.height < 64 {
            return Err(RenderError::InvalidConfig(format!(
                "image size {}x{} below 64x64",
                self.width, self.height
            )));
        }
        Ok(())
    }
}

/// What produced a pixel's final color.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum PixelKind {
    Background,
    Surface,
    Highlight,
    Dimmed,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Frame {
    pub image: Raster,
    pub kinds: Vec<PixelKind>,
}

impl Frame {
    pub fn count(&self, kind: PixelKind) -> usize {
        self.kinds.iter().filter(|&&k| k == kind).count()
    }
}

/// Step images followed by the final image.
#[derive(Debug, Clone, PartialEq)]
pub struct RenderSet {
    pub steps: Vec<Frame>,
    pub final_frame: Frame,
    pub camera: Camera,
}

impl RenderSet {
    /// All rasters in order: every step, then the final model.
    pub fn images(&self) -> Vec<&Raster> {
        self.steps.iter().chain([&self.final_frame]).map(|f| &f.image).collect()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Paint {
    Opaque(PixelKind),
    Skip,
    Dim,
}

const LIGHT: [f64; 3] = [2.0, -1.0, 3.0];

fn shade(tri: &[V3; 3]) -> f64 {
    let n = (tri[1] - tri[0]).cross(&(tri[2] - tri[0]));
    let lambert = n.try_normalize(0.0).map_or(0.0, |n| n.dot(&V3::from(LIGHT).normalize()).max(0.0));
    0.35 + 0.65 * lambert
}

fn tint(color: [u8; 3], s: f64) -> [f64; 3] {
    color.map(|c| c as f64 * s)
}

/// Ties on a shared edge go to exactly one of the two triangles.
fn owns_edge(ax: f64, ay: f64, bx: f64, by: f64) -> bool {
    let (dx, dy) = (bx - ax, by - ay);
    dy > 0.0 || (dy == 0.0 && dx < 0.0)
}

/// Calls `visit(pixel index, inv_depth)` for every covered pixel center of a
/// front-facing triangle.
fn rasterize(p: [Projected; 3], width: u32, height: u32, mut visit: impl FnMut(usize, f64)) {
    let area = (p[1].x - p[0].x) * (p[2].y - p[0].y) - (p[1].y - p[0].y) * (p[2].x - p[0].x);
    // Screen y points down, so outward-facing triangles come out clockwise.
    if !(area < 0.0) {
        return;
    }
    let p = [p[0], p[2], p[1]];
    let area = -area;
    let min_x = p.iter().map(|q| q.x).fold(f64::INFINITY, f64::min).floor().max(0.0) as u32;
    let max_x = p.iter().map(|q| q.x).fold(f64::NEG_INFINITY, f64::max).ceil().min(width as f64) as u32;
    let min_y = p.iter().map(|q| q.y).fold(f64::INFINITY, f64::min).floor().max(0.0) as u32;
    let max_y = p.iter().map(|q| q.y).fold(f64::NEG_INFINITY, f64::max).ceil().min(height as f64) as u32;
    let edge = |a: &Projected, b: &Projected, x: f64, y: f64| (b.x - a.x) * (y - a.y) - (b.y - a.y) * (x - a.x);
    let owns = [
        owns_edge(p[1].x, p[1].y, p[2].x, p[2].y),
        owns_edge(p[2].x, p[2].y, p[0].x, p[0].y),
        owns_edge(p[0].x, p[0].y, p[1].x, p[1].y),
    ];
    for py in min_y..max_y {
        let y = py as f64 + 0.5;
        for px in min_x..max_x {
            let x = px as f64 + 0.5;
            let w = [edge(&p[1], &p[2], x, y), edge(&p[2], &p[0], x, y), edge(&p[0], &p[1], x, y)];
            if (0..3).all(|i| w[i] > 0.0 || (w[i] == 0.0 && owns[i])) {
                let inv = (w[0] * p[0].inv_depth + w[1] * p[1].inv_depth + w[2] * p[2].inv_depth) / area;
                visit((py * width + px) as usize, inv);
            }
        }
    }
}

fn project_tri(mesh: &LabeledMesh, cam: &Camera, i: usize) -> ([V3; 3], [Projected; 3]) {
    let tri = mesh.triangle(i);
    (tri, tri.map(|v| cam.project(v)))
}

fn draw(mesh: &LabeledMesh, cam: &Camera, cfg: &RenderConfig, paint: impl Fn(usize) -> Paint) -> Frame {
    let n = (cfg.width * cfg.height) as usize;
    let mut color = vec![cfg.background.map(f64::from); n];
    let mut depth = vec![0.0f64; n];
    let mut kinds = vec![PixelKind::Background; n];
    let mut dimmed = Vec::new();
    for i in 0..mesh.triangles.len() {
        match paint(i) {
            Paint::Skip => {}
            Paint::Dim => dimmed.push(i),
            Paint::Opaque(kind) => {
                let (tri, p) = project_tri(mesh, cam, i);
                let base = if kind == PixelKind::Highlight { cfg.highlight_color } else { cfg.neutral_color };
                let c = tint(base, shade(&tri));
                rasterize(p, cfg.width, cfg.height, |px, inv| {
                    if inv > depth[px] {
                        depth[px] = inv;
                        color[px] = c;
                        kinds[px] = kind;
                    }
                });
            }
        }
    }
    // Back to front so nearer translucent layers land on top.
    let mut order: Vec<(f64, usize)> = dimmed
        .into_iter()
        .map(|i| {
            let tri = mesh.triangle(i);
            (tri.iter().map(|v| cam.depth(*v)).sum::<f64>() / 3.0, i)
        })
        .collect();
    order.sort_by(|a, b| b.0.total_cmp(&a.0).then(a.1.cmp(&b.1)));
    let a = cfg.dim_alpha;
    for (_, i) in order {
        let (tri, p) = project_tri(mesh, cam, i);
        let c = tint(cfg.neutral_color, shade(&tri));
        rasterize(p, cfg.width, cfg.height, |px, inv| {
            if inv > depth[px] {
                color[px] = [0, 1, 2].map(|k| a * c[k] + (1.0 - a) * color[px][k]);
                kinds[px] = PixelKind::Dimmed;
            }
        });
    }
    let pixels = color
        .into_iter()
        .map(|c| c.map(|v| v.round().clamp(0.0, 255.0) as u8))
        .collect();
    Frame {
        image: Raster {
            width: cfg.width,
            height: cfg.height,
            pixels,
        },
        kinds,
    }
}

fn fitted(mesh: &LabeledMesh, cfg: &RenderConfig) -> Result<Camera, RenderError> {
    let (lo, hi) = mesh.bounding_box().ok_or(RenderError::EmptyModel)?;
    Camera::fit(lo, hi, cfg.width, cfg.height).ok_or(RenderError::EmptyModel)
}

fn visible(frame: Frame) -> Result<Frame, RenderError> {
    if frame.count(PixelKind::Background) == frame.kinds.len() {
        return Err(RenderError::EmptyModel);
    }
    Ok(frame)
}

/// Z-buffered, flat-shaded view of a whole mesh in the neutral color.
pub fn render_single(mesh: &LabeledMesh, cfg: &RenderConfig) -> Result<Frame, RenderError> {
    cfg.check()?;
    let cam = fitted(mesh, cfg)?;
    visible(draw(mesh, &cam, cfg, |_| Paint::Opaque(PixelKind::Surface)))
}

/// Renders precompiled step folds; `folds[k]` holds triplets `0..=k`.
pub fn render_folds(folds: &[LabeledMesh], cfg: &RenderConfig) -> Result<RenderSet, RenderError> {
    cfg.check()?;
    let last = folds.last().ok_or(RenderError::EmptyModel)?;
    let cam = fitted(last, cfg)?;
    let steps = folds
        .iter()
        .enumerate()
        .map(|(k, mesh)| {
            draw(mesh, &cam, cfg, |i| match mesh.labels[i].triplet_index {
                t if t == k => Paint::Opaque(PixelKind::Highlight),
                t if t < k => Paint::Dim,
                _ => Paint::Skip,
            })
        })
        .collect();
    let final_frame = visible(draw(last, &cam, cfg, |_| Paint::Opaque(PixelKind::Surface)))?;
    Ok(RenderSet {
        steps,
        final_frame,
        camera: cam,
    })
}

/// Compiles `doc` and renders one image per triplet plus the finished model.
pub fn render_steps(doc: &SsrModelDoc, cfg: &RenderConfig) -> Result<RenderSet, RenderError> {
    cfg.check()?;
    render_folds(&compile_steps(doc, &cfg.tessellation)?, cfg)
}

/// Triplet index of the front-most triangle at every pixel, with every
/// triangle treated as opaque.
pub fn id_buffer(mesh: &LabeledMesh, cam: &Camera, cfg: &RenderConfig) -> Vec<Option<usize>> {
    let n = (cfg.width * cfg.height) as usize;
    let mut depth = vec![0.0f64; n];
    let mut ids = vec![None; n];
    for i in 0..mesh.triangles.len() {
        let (_, p) = project_tri(mesh, cam, i);
        let t = mesh.labels[i].triplet_index;
        rasterize(p, cfg.width, cfg.height, |px, inv| {
            if inv > depth[px] {
                depth[px] = inv;
                ids[px] = Some(t);
            }
        });
    }
    ids
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IndexEntry {
    pub file: String,
    pub kind: String,
    pub triplet_index: Option<usize>,
}

pub fn step_file_name(k: usize) -> String {
    format!("step_{k:03}.png")
}

/// Writes `step_000.png ..`, `final.png` and `index.json` into `dir`.
pub fn write_render_set(set: &RenderSet, dir: &Path) -> Result<Vec<IndexEntry>, RenderError> {
    std::fs::create_dir_all(dir)?;
    let mut index = Vec::new();
    for (k, frame) in set.steps.iter().enumerate() {
        let file = step_file_name(k);
        std::fs::write(dir.join(&file), frame.image.encode_png())?;
        index.push(IndexEntry {
            file,
            kind: "step".into(),
            triplet_index: Some(k),
        });
    }
    std::fs::write(dir.join("final.png"), set.final_frame.image.encode_png())?;
    index.push(IndexEntry {
        file: "final.png".into(),
        kind: "final".into(),
        triplet_index: None,
    });
    let json = serde_json::to_string_pretty(&serde_json::json!({ "images": index })).expect("index serializes");
    std::fs::write(dir.join("index.json"), json)?;
    Ok(index)
}

/// Reads back the rasters listed in a directory's `index.json`.
pub fn read_render_dir(dir: &Path) -> Result<Vec<(IndexEntry, Raster)>, RenderError> {
    #[derive(Deserialize)]
    struct Index {
        images: Vec<IndexEntry>,
    }
    let index: Index = serde_json::from_slice(&std::fs::read(dir.join("index.json"))?)
        .map_err(|e| RenderError::Index(e.to_string()))?;
    index
        .images
        .into_iter()
        .map(|e| {
            let r = Raster::decode_png(&std::fs::read(dir.join(&e.file))?)?;
            Ok((e, r))
        })
        .collect()
}
