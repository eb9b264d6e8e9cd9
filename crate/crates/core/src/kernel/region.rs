//! Sketch profiles as oriented polygon rings that remember which sketch
//! curve and point every vertex came from.

use super::{KernelError, TessellationConfig, V2};
use crate::model::{planar, tessellate_segment, Profile};

/// Which primitive generates the edge leaving a ring vertex.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub(crate) enum EdgeKey {
    Segment { lp: usize, seg: usize },
    /// Edge created by cutting the corner at the start of `seg`.
    Corner { lp: usize, seg: usize },
}

#[derive(Debug, Clone)]
pub(crate) struct RingVertex {
    pub p: V2,
    /// Edge from this vertex to the next one.
    pub edge: EdgeKey,
    /// Source tag for faces swept from that edge.
    pub label: String,
    /// Set when the vertex is the sketch point at the start of segment `seg`.
    pub point: Option<usize>,
}

#[derive(Debug, Clone)]
pub(crate) struct Ring {
    pub lp: usize,
    pub verts: Vec<RingVertex>,
}

impl Ring {
    pub fn positions(&self) -> Vec<V2> {
        self.verts.iter().map(|v| v.p).collect()
    }

    fn reverse(&mut self) {
        let n = self.verts.len();
        let old = self.verts.clone();
        for j in 0..n {
            let at = &old[n - 1 - j];
            let edge_from = &old[(2 * n - 2 - j) % n];
            self.verts[j] = RingVertex {
                p: at.p,
                point: at.point,
                edge: edge_from.edge,
                label: edge_from.label.clone(),
            };
        }
    }
}

/// One profile: `rings[0]` counter-clockwise, holes clockwise.
#[derive(Debug, Clone)]
pub(crate) struct Region {
    pub label: String,
    pub rings: Vec<Ring>,
}

#[derive(Debug, Clone, Copy)]
pub(crate) enum CornerCut {
    Chamfer(f64),
    Fillet(f64),
}

pub(crate) fn curve_label(profile: usize, lp: usize, seg: usize, tag: Option<&String>) -> String {
    tag.cloned().unwrap_or_else(|| format!("#p{profile}.l{lp}.s{seg}"))
}

pub(crate) fn profile_label(profile: usize, tag: Option<&String>) -> String {
    tag.cloned().unwrap_or_else(|| format!("#p{profile}"))
}

fn arr(p: V2) -> [f64; 2] {
    [p.x, p.y]
}

fn ring_area(pts: &[V2]) -> f64 {
    planar::signed_area(&pts.iter().map(|p| arr(*p)).collect::<Vec<_>>())
}

pub(crate) fn self_intersects(pts: &[V2]) -> bool {
    planar::ring_self_intersects(&pts.iter().map(|p| arr(*p)).collect::<Vec<_>>())
}

pub(crate) fn rings_cross(a: &[V2], b: &[V2]) -> bool {
    let a: Vec<_> = a.iter().map(|p| arr(*p)).collect();
    let b: Vec<_> = b.iter().map(|p| arr(*p)).collect();
    planar::rings_cross(&a, &b)
}

pub(crate) fn point_in_ring(p: V2, ring: &[V2]) -> bool {
    planar::point_in_ring(arr(p), &ring.iter().map(|p| arr(*p)).collect::<Vec<_>>())
}

impl Region {
    pub fn build(profile: &Profile, index: usize, cfg: &TessellationConfig) -> Result<Region, KernelError> {
        let label = profile_label(index, profile.profile_tag.as_ref());
        let mut rings = Vec::new();
        for (li, lp) in profile.loops.iter().enumerate() {
            let mut verts = Vec::new();
            for (si, seg) in lp.segments.iter().enumerate() {
                let pts = tessellate_segment(seg, cfg.sampling());
                let seg_label = curve_label(index, li, si, seg.curve_tag.as_ref());
                let take = if lp.is_circle() { pts.len() } else { pts.len().saturating_sub(1) };
                for (k, p) in pts.iter().take(take).enumerate() {
                    verts.push(RingVertex {
                        p: V2::new(p[0], p[1]),
                        edge: EdgeKey::Segment { lp: li, seg: si },
                        label: seg_label.clone(),
                        point: (k == 0 && !lp.is_circle()).then_some(si),
                    });
                }
            }
            let mut ring = Ring { lp: li, verts };
            let pts = ring.positions();
            let scale = pts.iter().fold(1e-300f64, |m, p| m.max(p.norm()));
            let area = if pts.len() >= 3 { ring_area(&pts) } else { 0.0 };
            if pts.len() >= 3 && self_intersects(&pts) {
                return Err(KernelError::SelfIntersectingLoop(label.clone()));
            }
            if area.abs() <= 1e-12 * scale * scale {
                return Err(KernelError::DegenerateProfile(label.clone()));
            }
            if (li == 0) != (area > 0.0) {
                ring.reverse();
            }
            rings.push(ring);
        }
        if rings.is_empty() {
            return Err(KernelError::DegenerateProfile(label));
        }
        Ok(Region {
            label,
            rings,
        })
    }

    #[cfg(test)]
    pub fn area(&self) -> f64 {
        self.rings.iter().map(|r| ring_area(&r.positions())).sum()
    }

    pub fn find_point(&self, lp: usize, seg: usize) -> Option<(usize, usize)> {
        let ri = self.rings.iter().position(|r| r.lp == lp)?;
        let vi = self.rings[ri].verts.iter().position(|v| v.point == Some(seg))?;
        Some((ri, vi))
    }

    /// Replaces the sketch corner at `(ring, vi)` by a straight or rounded cut
    /// with setback measured along both adjacent curves.
    pub fn cut_corner(
        &mut self,
        ring: usize,
        vi: usize,
        cut: CornerCut,
        label: &str,
        cfg: &TessellationConfig,
    ) -> Result<(), KernelError> {
        let r = &self.rings[ring];
        let n = r.verts.len();
        let c = r.verts[vi].p;
        let seg = r.verts[vi].point.expect("corner vertices are sketch points");
        let prev = r.verts[(vi + n - 1) % n].p;
        let next = r.verts[(vi + 1) % n].p;
        let u = (prev - c).normalize();
        let v = (next - c).normalize();
        let theta = u.dot(&v).clamp(-1.0, 1.0).acos();
        if theta > std::f64::consts::PI - 1e-6 {
            return Err(KernelError::UnresolvableEntity {
                reference: label.to_string(),
                reason: "no corner to refine at a smooth point".into(),
            });
        }
        let setback = match cut {
            CornerCut::Chamfer(w) => w,
            CornerCut::Fillet(radius) => radius / (theta / 2.0).tan(),
        };
        let too_large = || KernelError::RefinementTooLarge(format!("setback {setback} at {label} exceeds the adjacent curve"));
        let back = walk(r, vi, setback, false).ok_or_else(too_large)?;
        let fwd = walk(r, vi, setback, true).ok_or_else(too_large)?;
        if back.removed + fwd.removed + 2 >= n + 1 {
            return Err(too_large());
        }
        let lp = r.lp;
        let out_edge = (r.verts[vi].edge, r.verts[vi].label.clone());
        let mut cut_pts = vec![back.point];
        if let CornerCut::Fillet(radius) = cut {
            let exact = back.removed == 0 && fwd.removed == 0;
            let steps = ((cfg.circle_segments as f64) * (std::f64::consts::PI - theta) / std::f64::consts::TAU)
                .ceil()
                .max(2.0) as usize;
            if exact {
                let bis = (u + v).normalize();
                let center = c + bis * (radius / (theta / 2.0).sin());
                let a0 = back.point - center;
                let a1 = fwd.point - center;
                let sweep = a0.x * a1.y - a0.y * a1.x;
                let total = sweep.atan2(a0.dot(&a1));
                for k in 1..steps {
                    let ang = total * k as f64 / steps as f64;
                    let (s, co) = ang.sin_cos();
                    cut_pts.push(center + V2::new(a0.x * co - a0.y * s, a0.x * s + a0.y * co));
                }
            } else {
                for k in 1..steps {
                    let t = k as f64 / steps as f64;
                    cut_pts.push(back.point * (1.0 - t) * (1.0 - t) + c * (2.0 * t * (1.0 - t)) + fwd.point * (t * t));
                }
            }
        }
        let corner_vertices: Vec<RingVertex> = cut_pts
            .into_iter()
            .map(|p| RingVertex {
                p,
                edge: EdgeKey::Corner { lp, seg },
                label: label.to_string(),
                point: None,
            })
            .chain(std::iter::once(RingVertex {
                p: fwd.point,
                edge: out_edge.0,
                label: out_edge.1,
                point: None,
            }))
            .collect();
        // Rebuild the ring starting right after the forward walk end.
        let r = &self.rings[ring];
        let mut rebuilt = Vec::with_capacity(n + corner_vertices.len());
        let first_kept = (vi + fwd.removed + 1) % n;
        let kept = n - 1 - fwd.removed - back.removed;
        for k in 0..kept {
            rebuilt.push(r.verts[(first_kept + k) % n].clone());
        }
        rebuilt.extend(corner_vertices);
        self.rings[ring].verts = rebuilt;
        if self_intersects(&self.rings[ring].positions()) {
            return Err(too_large());
        }
        Ok(())
    }
}

struct Walk {
    point: V2,
    /// Ring vertices strictly between the corner and `point` that disappear.
    removed: usize,
}

/// Point at arc length `dist` from vertex `vi` along the ring, staying on the
/// curve adjacent to the corner.
fn walk(r: &Ring, vi: usize, dist: f64, forward: bool) -> Option<Walk> {
    let n = r.verts.len();
    let step = |i: usize| if forward { (i + 1) % n } else { (i + n - 1) % n };
    let edge_of = |from: usize| {
        if forward {
            r.verts[from].edge
        } else {
            r.verts[step(from)].edge
        }
    };
    let curve = edge_of(vi);
    let mut at = vi;
    let mut left = dist;
    let mut removed = 0;
    loop {
        let nxt = step(at);
        let (a, b) = (r.verts[at].p, r.verts[nxt].p);
        let len = (b - a).norm();
        if left < len - 1e-12 {
            return Some(Walk {
                point: a + (b - a) * (left / len),
                removed,
            });
        }
        left -= len;
        // Continue only through interior tessellation points of the same curve.
        if r.verts[nxt].point.is_some() || edge_of(nxt) != curve || nxt == vi {
            return None;
        }
        at = nxt;
        removed += 1;
    }
}

/// Moves every edge of `pts` to its left by its inset and reconnects
/// neighbouring edges at their line intersections.
pub(crate) fn offset_ring(pts: &[V2], insets: &[f64]) -> Option<Vec<V2>> {
    let n = pts.len();
    let dirs: Vec<V2> = (0..n)
        .map(|i| {
            let d = pts[(i + 1) % n] - pts[i];
            d / d.norm().max(1e-300)
        })
        .collect();
    let left = |d: V2| V2::new(-d.y, d.x);
    let mut out = Vec::with_capacity(n);
    for i in 0..n {
        let j = (i + n - 1) % n;
        let a = pts[i] + left(dirs[j]) * insets[j];
        let b = pts[i] + left(dirs[i]) * insets[i];
        let cr = dirs[j].x * dirs[i].y - dirs[j].y * dirs[i].x;
        if cr.abs() < 1e-9 {
            out.push((a + b) * 0.5);
        } else {
            let w = b - a;
            let s = (w.x * dirs[i].y - w.y * dirs[i].x) / cr;
            out.push(a + dirs[j] * s);
        }
    }
    if insets.iter().all(|&d| d == 0.0) {
        return Some(out);
    }
    for i in 0..n {
        let old = pts[(i + 1) % n] - pts[i];
        let new = out[(i + 1) % n] - out[i];
        if old.norm() > 1e-12 && new.dot(&old) <= 0.0 {
            return None;
        }
    }
    if self_intersects(&out) {
        return None;
    }
    Some(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{CurveSegment, Loop};

    fn square_profile() -> Profile {
        Profile {
            profile_tag: Some("p".into()),
            loops: vec![Loop::polygon(&[[0.0, 0.0], [1.0, 0.0], [1.0, 1.0], [0.0, 1.0]])],
        }
    }

    #[test]
    fn clockwise_input_is_reoriented_with_edges_kept() {
        let mut lp = Loop::polygon(&[[0.0, 0.0], [0.0, 1.0], [1.0, 1.0], [1.0, 0.0]]);
        lp.segments[0] = lp.segments[0].clone().with_curve_tag("left");
        let profile = Profile {
            profile_tag: None,
            loops: vec![lp],
        };
        let region = Region::build(&profile, 0, &TessellationConfig::default()).unwrap();
        assert!((region.area() - 1.0).abs() < 1e-12);
        let ring = &region.rings[0];
        // The tagged edge runs between (0,0) and (0,1) in either direction.
        let i = ring.verts.iter().position(|v| v.label == "left").unwrap();
        let a = ring.verts[i].p;
        let b = ring.verts[(i + 1) % 4].p;
        assert_eq!(a.x, 0.0);
        assert_eq!(b.x, 0.0);
        assert_ne!(a.y, b.y);
    }

    #[test]
    fn chamfer_removes_half_square_of_setback() {
        let cfg = TessellationConfig::default();
        let mut region = Region::build(&square_profile(), 0, &cfg).unwrap();
        let (ri, vi) = region.find_point(0, 1).unwrap();
        region.cut_corner(ri, vi, CornerCut::Chamfer(0.2), "v1", &cfg).unwrap();
        assert!((region.area() - (1.0 - 0.02)).abs() < 1e-12);
    }

    #[test]
    fn fillet_removes_corner_area() {
        let cfg = TessellationConfig {
            circle_segments: 4096,
            ..TessellationConfig::default()
        };
        let mut region = Region::build(&square_profile(), 0, &cfg).unwrap();
        let (ri, vi) = region.find_point(0, 2).unwrap();
        region.cut_corner(ri, vi, CornerCut::Fillet(0.2), "v2", &cfg).unwrap();
        let expected = 1.0 - 0.04 * (1.0 - std::f64::consts::FRAC_PI_4);
        assert!((region.area() - expected).abs() < 1e-6);
    }

    #[test]
    fn oversized_chamfer_is_rejected() {
        let cfg = TessellationConfig::default();
        let mut region = Region::build(&square_profile(), 0, &cfg).unwrap();
        let (ri, vi) = region.find_point(0, 0).unwrap();
        let err = region.cut_corner(ri, vi, CornerCut::Chamfer(1.5), "v0", &cfg).unwrap_err();
        assert!(matches!(err, KernelError::RefinementTooLarge(_)));
    }

    #[test]
    fn uniform_offset_of_square() {
        let pts = vec![
            V2::new(0.0, 0.0),
            V2::new(1.0, 0.0),
            V2::new(1.0, 1.0),
            V2::new(0.0, 1.0),
        ];
        let out = offset_ring(&pts, &[0.1; 4]).unwrap();
        assert!((ring_area(&out) - 0.64).abs() < 1e-12);
        assert!(offset_ring(&pts, &[0.6; 4]).is_none());
        // One edge only: a trapezoid-free strip of height 0.9.
        let out = offset_ring(&pts, &[0.1, 0.0, 0.0, 0.0]).unwrap();
        assert!((ring_area(&out) - 0.9).abs() < 1e-12);
    }

    #[test]
    fn circle_has_no_sketch_points() {
        let profile = Profile {
            profile_tag: None,
            loops: vec![Loop::closed(vec![CurveSegment::circle([0.0, 0.0], 1.0)])],
        };
        let region = Region::build(&profile, 0, &TessellationConfig::default()).unwrap();
        assert_eq!(region.rings[0].verts.len(), 64);
        assert!(region.rings[0].verts.iter().all(|v| v.point.is_none()));
    }
}
