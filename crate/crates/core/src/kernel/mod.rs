//! Mesh-based solid kernel.
//!
//! Triplets are swept into labeled triangle meshes, refined, and folded
//! through BSP booleans. Every triangle remembers the triplet, sketch tag and
//! cap type that produced it.

mod csg;
mod mesh;
mod region;
mod resolve;
mod sweep;
mod triangulate;

use crate::model::{BooleanOp, CurveSampling, SsrModelDoc, SsrTriplet};
use thiserror::Error;

pub use csg::boolean;
pub use mesh::{
    mesh_volume, sample_surface, triangle_area, EdgeReport, FaceLabel, LabeledMesh, MERGE_EPSILON,
};
pub use resolve::{resolve_entity, EntityGeometry, EntityKind, ResolvedEntity};
pub use sweep::compile_triplet;
pub use triangulate::triangulate;

pub type V2 = nalgebra::Vector2<f64>;
pub type V3 = nalgebra::Vector3<f64>;

/// Tessellation density.
#[derive(Debug, Clone, Copy, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
pub struct TessellationConfig {
    pub circle_segments: usize,
    pub revolve_segments: usize,
    pub spline_samples_per_span: usize,
    pub fillet_slices: usize,
}

impl Default for TessellationConfig {
    fn default() -> Self {
        TessellationConfig {
            circle_segments: 64,
            revolve_segments: 64,
            spline_samples_per_span: 16,
            fillet_slices: 8,
        }
    }
}

impl TessellationConfig {
    pub fn check(&self) -> Result<(), KernelError> {
        if self.circle_segments < 3
            || self.revolve_segments < 3
            || self.spline_samples_per_span < 2
            || self.fillet_slices < 1
        {
            return Err(KernelError::InvalidConfig(format!("{self:?}")));
        }
        Ok(())
    }

    pub(crate) fn sampling(&self) -> CurveSampling {
        CurveSampling {
            circle_segments: self.circle_segments,
            spline_samples_per_span: self.spline_samples_per_span,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum KernelError {
    #[error("invalid tessellation config {0}")]
    InvalidConfig(String),
    #[error("degenerate profile {0}")]
    DegenerateProfile(String),
    #[error("self-intersecting loop in profile {0}")]
    SelfIntersectingLoop(String),
    #[error("revolve axis crosses profile {0}")]
    AxisCrossesProfile(String),
    #[error("invalid revolve axis: {0}")]
    InvalidAxis(String),
    #[error("unresolvable entity {reference}: {reason}")]
    UnresolvableEntity { reference: String, reason: String },
    #[error("refinement too large: {0}")]
    RefinementTooLarge(String),
    #[error("shell offset self-intersects: {0}")]
    OffsetSelfIntersection(String),
    #[error("unsupported shell target {0}: only cap faces can be removed")]
    UnsupportedShell(String),
    #[error("boolean result is not manifold ({report:?})")]
    NonManifoldResult {
        report: EdgeReport,
        mesh: Box<LabeledMesh>,
    },
    #[error("mesh is not watertight ({0:?})")]
    NotWatertight(EdgeReport),
    #[error("mesh is empty")]
    EmptyMesh,
}

/// A kernel error attributed to the triplet being compiled or combined.
#[derive(Debug, Clone, PartialEq, Error)]
#[error("triplet {triplet_index}: {error}")]
pub struct CompileError {
    pub triplet_index: usize,
    pub error: KernelError,
}

/// Compiles every triplet and returns the running boolean fold after each
/// step: element `k` holds triplets `0..=k` combined.
pub fn compile_steps(
    doc: &SsrModelDoc,
    cfg: &TessellationConfig,
) -> Result<Vec<LabeledMesh>, CompileError> {
    let mut steps = Vec::with_capacity(doc.triplets.len());
    let mut acc: Option<LabeledMesh> = None;
    for (i, t) in doc.triplets.iter().enumerate() {
        let tag = |error| CompileError {
            triplet_index: i,
            error,
        };
        let solid = compile_triplet_at(t, i, cfg).map_err(tag)?;
        let next = match acc {
            None => solid,
            Some(prev) => {
                let op = doc.ops.get(i - 1).copied().unwrap_or(BooleanOp::Union);
                boolean(&prev, op, &solid).map_err(tag)?
            }
        };
        steps.push(next.clone());
        acc = Some(next);
    }
    if steps.is_empty() {
        return Err(CompileError {
            triplet_index: 0,
            error: KernelError::EmptyMesh,
        });
    }
    Ok(steps)
}

/// Left fold of the document's triplets through its boolean operators.
pub fn compile_model(doc: &SsrModelDoc, cfg: &TessellationConfig) -> Result<LabeledMesh, CompileError> {
    Ok(compile_steps(doc, cfg)?.pop().expect("at least one step"))
}

/// Like [`compile_triplet`] but labels triangles with `triplet_index`.
pub fn compile_triplet_at(
    t: &SsrTriplet,
    triplet_index: usize,
    cfg: &TessellationConfig,
) -> Result<LabeledMesh, KernelError> {
    sweep::compile_indexed(t, triplet_index, cfg)
}
