//! Mapping (sketch tag, cap type) pairs to the 3D primitive they generate.

use super::region::EdgeKey;
use super::sweep::{build_regions, finish, loft, Station, SweepPath};
use super::{KernelError, TessellationConfig, V3};
use crate::model::{CapType, EntityRef, SsrTriplet, TagTarget};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub(crate) enum Side {
    Start,
    End,
}

impl Side {
    fn of(c: CapType) -> Option<Side> {
        match c {
            CapType::Start => Some(Side::Start),
            CapType::End => Some(Side::End),
            CapType::Swept => None,
        }
    }

    fn cap(self) -> CapType {
        match self {
            Side::Start => CapType::Start,
            Side::End => CapType::End,
        }
    }
}

/// A reference located in the sketch, before any geometry is built.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub(crate) enum Target {
    /// Edge traced by the sketch point at the start of `seg`.
    Point { lp: usize, seg: usize },
    LateralFace { lp: usize, seg: usize },
    Rim { side: Side, lp: usize, seg: usize },
    Cap { side: Side },
}

#[derive(Debug, Clone, Copy)]
pub(crate) struct Located {
    pub profile: usize,
    pub target: Target,
}

fn unresolvable(r: &EntityRef, reason: &str) -> KernelError {
    KernelError::UnresolvableEntity {
        reference: format!("{}/{}", r.reference_id, r.cap_type),
        reason: reason.into(),
    }
}

pub(crate) fn locate(r: &EntityRef, t: &SsrTriplet) -> Result<Located, KernelError> {
    let target = t
        .find_tag(&r.reference_id)
        .ok_or_else(|| unresolvable(r, "tag is not declared in this sketch"))?;
    let full = t.feature.is_full_revolution();
    let side = Side::of(r.cap_type);
    match (target, side) {
        (TagTarget::Point { profile, lp, vertex }, None) => {
            let lp_ref = &t.sketch.profiles[profile].loops[lp];
            if lp_ref.is_circle() {
                return Err(unresolvable(r, "a circle center is not on the solid"));
            }
            let nseg = lp_ref.segments.len().max(1);
            Ok(Located {
                profile,
                target: Target::Point { lp, seg: vertex % nseg },
            })
        }
        (TagTarget::Point { .. }, Some(_)) => Err(unresolvable(r, "a point generates no cap primitive")),
        (TagTarget::Curve { profile, lp, segment }, None) => Ok(Located {
            profile,
            target: Target::LateralFace { lp, seg: segment },
        }),
        (TagTarget::Curve { .. }, Some(_)) if full => Err(unresolvable(r, "a full revolution has no caps")),
        (TagTarget::Curve { profile, lp, segment }, Some(side)) => Ok(Located {
            profile,
            target: Target::Rim { side, lp, seg: segment },
        }),
        (TagTarget::Profile { .. }, None) => Err(unresolvable(r, "a profile sweeps no single face")),
        (TagTarget::Profile { .. }, Some(_)) if full => Err(unresolvable(r, "a full revolution has no caps")),
        (TagTarget::Profile { profile }, Some(side)) => Ok(Located {
            profile,
            target: Target::Cap { side },
        }),
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum EntityKind {
    Edge,
    Face,
}

#[derive(Debug, Clone, PartialEq)]
pub enum EntityGeometry {
    Polyline(Vec<V3>),
    Triangles(Vec<[V3; 3]>),
}

#[derive(Debug, Clone, PartialEq)]
pub struct ResolvedEntity {
    pub kind: EntityKind,
    pub geometry: EntityGeometry,
    pub origin: EntityRef,
}

/// Resolves a reference against the unrefined solid of `t`.
pub fn resolve_entity(r: &EntityRef, t: &SsrTriplet, cfg: &TessellationConfig) -> Result<ResolvedEntity, KernelError> {
    cfg.check()?;
    let loc = locate(r, t)?;
    let path = SweepPath::new(t)?;
    let regions = build_regions(t, &path, cfg)?;
    let region = &regions[loc.profile];
    let edge = |pts: Vec<V3>| -> Result<ResolvedEntity, KernelError> {
        let span = pts.iter().map(|p| (p - pts[0]).norm()).fold(0.0, f64::max);
        if pts.len() < 2 || span < 1e-9 {
            return Err(unresolvable(r, "edge degenerates on the revolve axis"));
        }
        Ok(ResolvedEntity {
            kind: EntityKind::Edge,
            geometry: EntityGeometry::Polyline(pts),
            origin: r.clone(),
        })
    };
    let faces = |keep: &dyn Fn(&super::FaceLabel) -> bool| -> Result<ResolvedEntity, KernelError> {
        let params = path.base_params(cfg);
        let stations: Vec<Station> = params
            .into_iter()
            .map(|t| Station {
                t,
                rings: region.rings.iter().map(|ring| ring.positions()).collect(),
            })
            .collect();
        let mesh = finish(loft(region, &stations, &path, path.full, 0));
        let tris: Vec<[V3; 3]> = (0..mesh.triangles.len())
            .filter(|&i| keep(&mesh.labels[i]))
            .map(|i| mesh.triangle(i))
            .filter(|t| super::triangle_area(t) > 1e-18)
            .collect();
        if tris.is_empty() {
            return Err(unresolvable(r, "face degenerates on the revolve axis"));
        }
        Ok(ResolvedEntity {
            kind: EntityKind::Face,
            geometry: EntityGeometry::Triangles(tris),
            origin: r.clone(),
        })
    };
    match loc.target {
        Target::Point { lp, seg } => {
            let (ri, vi) = region
                .find_point(lp, seg)
                .ok_or_else(|| unresolvable(r, "point is not on the profile boundary"))?;
            let p = region.rings[ri].verts[vi].p;
            let mut params = path.base_params(cfg);
            if path.full {
                params.push(path.t1);
            }
            edge(params.into_iter().map(|t| path.place(p, t)).collect())
        }
        Target::LateralFace { .. } => {
            faces(&|l| l.cap_type == CapType::Swept && l.source_tag == r.reference_id)
        }
        Target::Rim { side, lp, seg } => {
            let ring = region
                .rings
                .iter()
                .find(|ring| ring.lp == lp)
                .ok_or_else(|| unresolvable(r, "curve is not on the profile boundary"))?;
            let n = ring.verts.len();
            let key = EdgeKey::Segment { lp, seg };
            // Start at the first vertex of the curve's run of edges.
            let start = (0..n)
                .find(|&i| ring.verts[i].edge == key && ring.verts[(i + n - 1) % n].edge != key)
                .unwrap_or(0);
            let mut pts2 = Vec::new();
            let mut i = start;
            while ring.verts[i].edge == key && pts2.len() < n {
                pts2.push(ring.verts[i].p);
                i = (i + 1) % n;
            }
            pts2.push(ring.verts[i].p);
            let t = match side {
                Side::Start => path.t0,
                Side::End => path.t1,
            };
            edge(pts2.into_iter().map(|p| path.place(p, t)).collect())
        }
        Target::Cap { side } => {
            let cap = side.cap();
            let label = region.label.clone();
            faces(&move |l| l.cap_type == cap && l.source_tag == label)
        }
    }
}
