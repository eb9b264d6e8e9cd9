//! SSR domain types.
//!
//! A model is an ordered list of (sketch, sweep feature, refinements) triplets
//! folded left to right through boolean operators. All types are plain values
//! and serialize to the canonical JSON document format.

mod curve;
mod io;
pub mod planar;
mod validate;

use serde::{Deserialize, Serialize};
use std::fmt;

pub use curve::{tessellate_segment, CurveSampling};
pub use io::{read_doc, write_doc, MalformedDocument};
pub use validate::{validate_doc, ValidationReport, Violation};

/// Tolerance used when comparing sketch endpoints.
pub const ENDPOINT_TOLERANCE: f64 = 1e-7;

pub type Point2 = [f64; 2];
pub type Point3 = [f64; 3];

/// Sketch plane: origin plus an orthonormal (x_axis, normal) pair.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PlaneFrame {
    pub origin: Point3,
    pub x_axis: Point3,
    pub normal: Point3,
}

impl PlaneFrame {
    /// The XY plane through the world origin.
    pub fn xy() -> Self {
        PlaneFrame {
            origin: [0.0, 0.0, 0.0],
            x_axis: [1.0, 0.0, 0.0],
            normal: [0.0, 0.0, 1.0],
        }
    }

    pub fn y_axis(&self) -> Point3 {
        cross(self.normal, self.x_axis)
    }

    /// Maps sketch coordinates (plus an offset along the normal) to world space.
    pub fn to_world(&self, p: Point2, height: f64) -> Point3 {
        let y = self.y_axis();
        let mut out = [0.0; 3];
        for (i, o) in out.iter_mut().enumerate() {
            *o = self.origin[i] + p[0] * self.x_axis[i] + p[1] * y[i] + height * self.normal[i];
        }
        out
    }

    /// Projects a world point into sketch coordinates (dropping the normal component).
    pub fn to_sketch(&self, p: Point3) -> Point2 {
        let d = sub(p, self.origin);
        [dot(d, self.x_axis), dot(d, self.y_axis())]
    }

    pub fn normal_offset(&self, p: Point3) -> f64 {
        dot(sub(p, self.origin), self.normal)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum CurveKind {
    Line,
    ThreePointArc,
    Spline,
    Circle,
}

/// One sketch curve. `control_points[0]` is the start point for every kind
/// except `Circle`, where it is the center and `radius` is set.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CurveSegment {
    pub kind: CurveKind,
    pub control_points: Vec<Point2>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub radius: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub curve_tag: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub end_point_tag: Option<String>,
}

impl CurveSegment {
    pub fn line(a: Point2, b: Point2) -> Self {
        CurveSegment {
            kind: CurveKind::Line,
            control_points: vec![a, b],
            radius: None,
            curve_tag: None,
            end_point_tag: None,
        }
    }

    pub fn arc(start: Point2, mid: Point2, end: Point2) -> Self {
        CurveSegment {
            kind: CurveKind::ThreePointArc,
            control_points: vec![start, mid, end],
            radius: None,
            curve_tag: None,
            end_point_tag: None,
        }
    }

    pub fn spline(points: Vec<Point2>) -> Self {
        CurveSegment {
            kind: CurveKind::Spline,
            control_points: points,
            radius: None,
            curve_tag: None,
            end_point_tag: None,
        }
    }

    pub fn circle(center: Point2, radius: f64) -> Self {
        CurveSegment {
            kind: CurveKind::Circle,
            control_points: vec![center],
            radius: Some(radius),
            curve_tag: None,
            end_point_tag: None,
        }
    }

    pub fn with_curve_tag(mut self, tag: impl Into<String>) -> Self {
        self.curve_tag = Some(tag.into());
        self
    }

    pub fn with_end_tag(mut self, tag: impl Into<String>) -> Self {
        self.end_point_tag = Some(tag.into());
        self
    }

    pub fn start(&self) -> Option<Point2> {
        match self.kind {
            CurveKind::Circle => {
                let c = *self.control_points.first()?;
                Some([c[0] + self.radius?, c[1]])
            }
            _ => self.control_points.first().copied(),
        }
    }

    pub fn end(&self) -> Option<Point2> {
        match self.kind {
            CurveKind::Circle => self.start(),
            _ => self.control_points.last().copied(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Loop {
    pub segments: Vec<CurveSegment>,
    pub closed: bool,
    /// Tag of the loop's start point (set by `pointTag` right after `moveTo`).
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub start_point_tag: Option<String>,
}

impl Loop {
    pub fn closed(segments: Vec<CurveSegment>) -> Self {
        Loop {
            segments,
            closed: true,
            start_point_tag: None,
        }
    }

    /// Closed polygon through `points` made of line segments.
    pub fn polygon(points: &[Point2]) -> Self {
        let n = points.len();
        let segments = (0..n)
            .map(|i| CurveSegment::line(points[i], points[(i + 1) % n]))
            .collect();
        Loop::closed(segments)
    }

    pub fn is_circle(&self) -> bool {
        self.segments.len() == 1 && self.segments[0].kind == CurveKind::Circle
    }
}

/// A face: first loop is the outer boundary, the rest are holes.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Profile {
    #[serde(rename = "tag", default, skip_serializing_if = "Option::is_none")]
    pub profile_tag: Option<String>,
    pub loops: Vec<Loop>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Sketch {
    pub plane: PlaneFrame,
    pub profiles: Vec<Profile>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum SweepKind {
    Extrude,
    Revolve,
}

/// Sweep extent: a scalar, or a (forward, backward) pair.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum Extent {
    Single(f64),
    Pair([f64; 2]),
}

impl Extent {
    /// Signed parameter range `(start, end)` along the sweep; a scalar `d` is `(0, d)`.
    pub fn range(&self) -> (f64, f64) {
        match *self {
            Extent::Single(d) => (0.0, d),
            Extent::Pair([f, b]) => (-b, f),
        }
    }

    pub fn total(&self) -> f64 {
        let (a, b) = self.range();
        b - a
    }

    pub fn values(&self) -> Vec<f64> {
        match *self {
            Extent::Single(d) => vec![d],
            Extent::Pair([f, b]) => vec![f, b],
        }
    }

    pub fn scaled(&self, s: f64) -> Extent {
        match *self {
            Extent::Single(d) => Extent::Single(d * s),
            Extent::Pair([f, b]) => Extent::Pair([f * s, b * s]),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Axis {
    pub point: Point3,
    pub direction: Point3,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SweepFeature {
    pub kind: SweepKind,
    pub extent: Extent,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub axis: Option<Axis>,
}

impl SweepFeature {
    pub fn extrude(extent: Extent) -> Self {
        SweepFeature {
            kind: SweepKind::Extrude,
            extent,
            axis: None,
        }
    }

    pub fn revolve(axis: Axis, degrees: Extent) -> Self {
        SweepFeature {
            kind: SweepKind::Revolve,
            extent: degrees,
            axis: Some(axis),
        }
    }

    /// True for a revolve covering the full 360 degrees (no caps).
    pub fn is_full_revolution(&self) -> bool {
        self.kind == SweepKind::Revolve && (self.extent.total() - 360.0).abs() < 1e-9
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum CapType {
    #[serde(rename = "START")]
    Start,
    #[serde(rename = "END")]
    End,
    #[serde(rename = "SWEPT", alias = "SWEEP")]
    Swept,
}

impl CapType {
    pub const ALL: [CapType; 3] = [CapType::Start, CapType::End, CapType::Swept];

    pub fn as_str(&self) -> &'static str {
        match self {
            CapType::Start => "START",
            CapType::End => "END",
            CapType::Swept => "SWEPT",
        }
    }

    pub fn parse(s: &str) -> Option<CapType> {
        match s {
            "START" => Some(CapType::Start),
            "END" => Some(CapType::End),
            "SWEPT" | "SWEEP" => Some(CapType::Swept),
            _ => None,
        }
    }
}

impl fmt::Display for CapType {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EntityRef {
    #[serde(rename = "capType")]
    pub cap_type: CapType,
    #[serde(rename = "referenceId")]
    pub reference_id: String,
}

impl EntityRef {
    pub fn new(cap_type: CapType, reference_id: impl Into<String>) -> Self {
        EntityRef {
            cap_type,
            reference_id: reference_id.into(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum RefinementKind {
    Chamfer,
    Fillet,
    Shell,
}

impl RefinementKind {
    pub fn as_str(&self) -> &'static str {
        match self {
            RefinementKind::Chamfer => "Chamfer",
            RefinementKind::Fillet => "Fillet",
            RefinementKind::Shell => "Shell",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Refinement {
    pub kind: RefinementKind,
    pub magnitude: f64,
    pub entities: Vec<EntityRef>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SsrTriplet {
    pub sketch: Sketch,
    pub feature: SweepFeature,
    #[serde(default)]
    pub refinements: Vec<Refinement>,
}

/// What kind of sketch primitive a tag names.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum TagTarget {
    /// A loop vertex: `(profile, loop, vertex)` where vertex 0 is the loop start
    /// and vertex `i > 0` is the end of segment `i - 1`.
    Point {
        profile: usize,
        lp: usize,
        vertex: usize,
    },
    Curve {
        profile: usize,
        lp: usize,
        segment: usize,
    },
    Profile {
        profile: usize,
    },
}

impl SsrTriplet {
    /// Every tag declared in this triplet's sketch, in declaration order.
    pub fn tags(&self) -> Vec<(&str, TagTarget)> {
        let mut out = Vec::new();
        for (pi, profile) in self.sketch.profiles.iter().enumerate() {
            if let Some(t) = &profile.profile_tag {
                out.push((t.as_str(), TagTarget::Profile { profile: pi }));
            }
            for (li, lp) in profile.loops.iter().enumerate() {
                if let Some(t) = &lp.start_point_tag {
                    out.push((
                        t.as_str(),
                        TagTarget::Point {
                            profile: pi,
                            lp: li,
                            vertex: 0,
                        },
                    ));
                }
                for (si, seg) in lp.segments.iter().enumerate() {
                    if let Some(t) = &seg.curve_tag {
                        out.push((
                            t.as_str(),
                            TagTarget::Curve {
                                profile: pi,
                                lp: li,
                                segment: si,
                            },
                        ));
                    }
                    if let Some(t) = &seg.end_point_tag {
                        out.push((
                            t.as_str(),
                            TagTarget::Point {
                                profile: pi,
                                lp: li,
                                vertex: si + 1,
                            },
                        ));
                    }
                }
            }
        }
        out
    }

    pub fn find_tag(&self, tag: &str) -> Option<TagTarget> {
        self.tags()
            .into_iter()
            .find(|(t, _)| *t == tag)
            .map(|(_, target)| target)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum BooleanOp {
    Union,
    Cut,
    Intersect,
}

impl BooleanOp {
    pub fn as_str(&self) -> &'static str {
        match self {
            BooleanOp::Union => "Union",
            BooleanOp::Cut => "Cut",
            BooleanOp::Intersect => "Intersect",
        }
    }
}

/// Canonical document for one CAD model.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SsrModelDoc {
    pub doc_id: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub description: Option<String>,
    pub triplets: Vec<SsrTriplet>,
    #[serde(default)]
    pub ops: Vec<BooleanOp>,
}

impl SsrModelDoc {
    pub fn single(doc_id: impl Into<String>, triplet: SsrTriplet) -> Self {
        SsrModelDoc {
            doc_id: doc_id.into(),
            description: None,
            triplets: vec![triplet],
            ops: Vec::new(),
        }
    }

    /// Equality of the geometric content, ignoring `doc_id` and `description`.
    pub fn same_structure(&self, other: &SsrModelDoc) -> bool {
        self.triplets == other.triplets && self.ops == other.ops
    }

    /// Prefix of the document holding the first `n` triplets.
    pub fn prefix(&self, n: usize) -> SsrModelDoc {
        let n = n.clamp(1, self.triplets.len().max(1));
        SsrModelDoc {
            doc_id: self.doc_id.clone(),
            description: self.description.clone(),
            triplets: self.triplets[..n.min(self.triplets.len())].to_vec(),
            ops: self.ops[..(n - 1).min(self.ops.len())].to_vec(),
        }
    }
}

pub(crate) fn sub(a: Point3, b: Point3) -> Point3 {
    [a[0] - b[0], a[1] - b[1], a[2] - b[2]]
}

pub(crate) fn dot(a: Point3, b: Point3) -> f64 {
    a[0] * b[0] + a[1] * b[1] + a[2] * b[2]
}

pub(crate) fn cross(a: Point3, b: Point3) -> Point3 {
    [
        a[1] * b[2] - a[2] * b[1],
        a[2] * b[0] - a[0] * b[2],
        a[0] * b[1] - a[1] * b[0],
    ]
}

pub(crate) fn norm(a: Point3) -> f64 {
    dot(a, a).sqrt()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn extent_ranges() {
        assert_eq!(Extent::Single(2.0).range(), (0.0, 2.0));
        assert_eq!(Extent::Pair([0.5, 0.25]).range(), (-0.25, 0.5));
        assert_eq!(Extent::Pair([0.5, 0.25]).total(), 0.75);
    }

    #[test]
    fn plane_round_trip() {
        let plane = PlaneFrame {
            origin: [1.0, 2.0, 3.0],
            x_axis: [0.0, 1.0, 0.0],
            normal: [1.0, 0.0, 0.0],
        };
        let w = plane.to_world([0.25, -0.5], 0.0);
        let back = plane.to_sketch(w);
        assert!((back[0] - 0.25).abs() < 1e-12 && (back[1] + 0.5).abs() < 1e-12);
    }

    #[test]
    fn cap_type_accepts_sweep_alias() {
        let r: EntityRef = serde_json::from_str(r#"{"capType":"SWEEP","referenceId":"a"}"#).unwrap();
        assert_eq!(r.cap_type, CapType::Swept);
    }
}
