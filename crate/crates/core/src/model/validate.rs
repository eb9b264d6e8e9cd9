use super::planar::{close, loop_polyline, point_in_ring, ring_self_intersects, rings_cross};
use super::*;
use std::collections::HashMap;

/// One broken invariant, addressed by a JSON-pointer-like path.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Violation {
    pub path: String,
    pub message: String,
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct ValidationReport {
    pub violations: Vec<Violation>,
}

impl ValidationReport {
    pub fn is_valid(&self) -> bool {
        self.violations.is_empty()
    }

    fn push(&mut self, path: impl Into<String>, message: impl Into<String>) {
        self.violations.push(Violation {
            path: path.into(),
            message: message.into(),
        });
    }

    pub fn messages(&self) -> Vec<String> {
        self.violations
            .iter()
            .map(|v| format!("{}: {}", v.path, v.message))
            .collect()
    }
}

const UNIT_TOL: f64 = 1e-9;
const AXIS_TOL: f64 = 1e-6;

/// Checks every structural invariant of a document. Never panics on a
/// document that deserialized.
pub fn validate_doc(doc: &SsrModelDoc) -> ValidationReport {
    let mut report = ValidationReport::default();
    if doc.triplets.is_empty() {
        report.push("/triplets", "document has no triplets");
    }
    if doc.ops.len() + 1 != doc.triplets.len() {
        report.push(
            "/ops",
            format!(
                "ops length {} does not match {} triplets (expected {})",
                doc.ops.len(),
                doc.triplets.len(),
                doc.triplets.len().saturating_sub(1)
            ),
        );
    }

    let mut seen: HashMap<&str, String> = HashMap::new();
    for (ti, t) in doc.triplets.iter().enumerate() {
        let base = format!("/triplets/{ti}");
        for (tag, _) in t.tags() {
            if let Some(prev) = seen.get(tag) {
                report.push(&base, format!("duplicate tag {tag} (first declared in {prev})"));
            } else {
                seen.insert(tag, base.clone());
            }
        }
        validate_triplet(t, &base, &mut report);
    }
    report
}

fn validate_triplet(t: &SsrTriplet, base: &str, report: &mut ValidationReport) {
    validate_plane(&t.sketch.plane, &format!("{base}/sketch/plane"), report);
    if t.sketch.profiles.is_empty() {
        report.push(format!("{base}/sketch/profiles"), "sketch has no profiles");
    }
    let mut rings = Vec::new();
    for (pi, profile) in t.sketch.profiles.iter().enumerate() {
        let ppath = format!("{base}/sketch/profiles/{pi}");
        rings.push(validate_profile(profile, &ppath, report));
    }
    validate_feature(t, &rings, &format!("{base}/feature"), report);

    for (ri, r) in t.refinements.iter().enumerate() {
        let rpath = format!("{base}/refinements/{ri}");
        if !(r.magnitude.is_finite() && r.magnitude > 0.0) {
            report.push(&rpath, format!("{} magnitude must be positive", r.kind.as_str()));
        }
        if r.entities.is_empty() {
            report.push(&rpath, "refinement references no entities");
        }
        for (ei, e) in r.entities.iter().enumerate() {
            if t.find_tag(&e.reference_id).is_none() {
                report.push(
                    format!("{rpath}/entities/{ei}"),
                    format!("unresolvable EntityRef {}", e.reference_id),
                );
            }
        }
    }
}

fn validate_plane(plane: &PlaneFrame, path: &str, report: &mut ValidationReport) {
    let all = plane.origin.iter().chain(&plane.x_axis).chain(&plane.normal);
    if all.clone().any(|v| !v.is_finite()) {
        report.push(path, "non-finite plane component");
        return;
    }
    if (norm(plane.x_axis) - 1.0).abs() > UNIT_TOL {
        report.push(format!("{path}/x_axis"), "x_axis is not unit length");
    }
    if (norm(plane.normal) - 1.0).abs() > UNIT_TOL {
        report.push(format!("{path}/normal"), "normal is not unit length");
    }
    if dot(plane.x_axis, plane.normal).abs() > UNIT_TOL {
        report.push(path, "x_axis is not orthogonal to normal");
    }
}

/// Validates a profile and returns its outer ring polyline (if usable).
fn validate_profile(profile: &Profile, path: &str, report: &mut ValidationReport) -> Vec<Point2> {
    if profile.loops.is_empty() {
        report.push(path, "profile has no loops");
        return Vec::new();
    }
    let sampling = CurveSampling {
        circle_segments: 48,
        spline_samples_per_span: 8,
    };
    let mut rings = Vec::new();
    for (li, lp) in profile.loops.iter().enumerate() {
        let lpath = format!("{path}/loops/{li}");
        let ok = validate_loop(lp, &lpath, report);
        let ring = if ok { loop_polyline(lp, sampling) } else { Vec::new() };
        if ok && ring.len() >= 3 && ring_self_intersects(&ring) {
            report.push(&lpath, "loop intersects itself");
        }
        if ok && ring.len() >= 3 && planar::signed_area(&ring).abs() < 1e-14 {
            report.push(&lpath, "loop encloses zero area");
        }
        rings.push(ring);
    }
    let outer = rings[0].clone();
    if outer.len() < 3 {
        return outer;
    }
    for (hi, hole) in rings.iter().enumerate().skip(1) {
        if hole.len() < 3 {
            continue;
        }
        let inside = hole.iter().all(|p| point_in_ring(*p, &outer));
        if !inside || rings_cross(hole, &outer) {
            report.push(format!("{path}/loops/{hi}"), "hole is not strictly inside the outer loop");
        }
        for (hj, other) in rings.iter().enumerate().skip(hi + 1) {
            if other.len() < 3 {
                continue;
            }
            let overlap = rings_cross(hole, other)
                || point_in_ring(other[0], hole)
                || point_in_ring(hole[0], other);
            if overlap {
                report.push(format!("{path}/loops/{hj}"), format!("hole overlaps hole {hi}"));
            }
        }
    }
    outer
}

fn validate_loop(lp: &Loop, path: &str, report: &mut ValidationReport) -> bool {
    let start_errors = report.violations.len();
    if lp.segments.is_empty() {
        report.push(path, "loop has no segments");
        return false;
    }
    if !lp.closed {
        report.push(path, "loop is not closed");
    }
    let has_circle = lp.segments.iter().any(|s| s.kind == CurveKind::Circle);
    if has_circle && lp.segments.len() != 1 {
        report.push(path, "a circle must be the only segment of its loop");
    }
    for (si, seg) in lp.segments.iter().enumerate() {
        let spath = format!("{path}/segments/{si}");
        if seg.control_points.iter().flatten().any(|v| !v.is_finite()) {
            report.push(&spath, "non-finite control point");
            continue;
        }
        let n = seg.control_points.len();
        match seg.kind {
            CurveKind::Line if n != 2 => report.push(&spath, format!("Line needs 2 points, has {n}")),
            CurveKind::ThreePointArc if n != 3 => {
                report.push(&spath, format!("ThreePointArc needs 3 points, has {n}"))
            }
            CurveKind::ThreePointArc => {
                let p = &seg.control_points;
                if curve::circumcircle(p[0], p[1], p[2]).is_none() {
                    report.push(&spath, "ThreePointArc points are collinear");
                }
            }
            CurveKind::Spline if n < 2 => report.push(&spath, format!("Spline needs at least 2 points, has {n}")),
            CurveKind::Circle => {
                if n != 1 {
                    report.push(&spath, "Circle stores exactly one center point");
                }
                match seg.radius {
                    Some(r) if r.is_finite() && r > 0.0 => {}
                    _ => report.push(&spath, "Circle radius must be positive"),
                }
            }
            _ => {}
        }
        if seg.kind != CurveKind::Circle && seg.radius.is_some() {
            report.push(&spath, "radius is only valid on Circle");
        }
    }
    if report.violations.len() > start_errors {
        return false;
    }
    if has_circle {
        return true;
    }
    for i in 1..lp.segments.len() {
        let (prev, cur) = (&lp.segments[i - 1], &lp.segments[i]);
        if let (Some(a), Some(b)) = (prev.end(), cur.start()) {
            if !close(a, b) {
                report.push(format!("{path}/segments/{i}"), "segment does not start where the previous one ends");
            }
        }
    }
    if lp.closed {
        let first = lp.segments[0].start();
        let last = lp.segments[lp.segments.len() - 1].end();
        if let (Some(a), Some(b)) = (first, last) {
            if !close(a, b) {
                report.push(path, "closed loop does not end at its start point");
            }
        }
    }
    report.violations.len() == start_errors
}

fn validate_feature(t: &SsrTriplet, outer_rings: &[Vec<Point2>], path: &str, report: &mut ValidationReport) {
    let f = &t.feature;
    if f.extent.values().iter().any(|v| !v.is_finite()) {
        report.push(format!("{path}/extent"), "non-finite extent");
        return;
    }
    match f.kind {
        SweepKind::Extrude => {
            if f.extent.total() <= 0.0 {
                report.push(format!("{path}/extent"), "extrude total extent must be positive");
            }
            if f.axis.is_some() {
                report.push(format!("{path}/axis"), "axis is only valid on Revolve");
            }
        }
        SweepKind::Revolve => {
            let total = f.extent.total();
            if !(total > 0.0 && total <= 360.0 + 1e-9) {
                report.push(format!("{path}/extent"), "revolve angle must lie in (0, 360]");
            }
            let Some(axis) = &f.axis else {
                report.push(format!("{path}/axis"), "revolve requires an axis");
                return;
            };
            let plane = &t.sketch.plane;
            if (norm(axis.direction) - 1.0).abs() > AXIS_TOL {
                report.push(format!("{path}/axis/direction"), "axis direction is not unit length");
            }
            if plane.normal_offset(axis.point).abs() > AXIS_TOL || dot(axis.direction, plane.normal).abs() > AXIS_TOL {
                report.push(format!("{path}/axis"), "axis does not lie in the sketch plane");
                return;
            }
            let a = plane.to_sketch(axis.point);
            let tip = plane.to_sketch([
                axis.point[0] + axis.direction[0],
                axis.point[1] + axis.direction[1],
                axis.point[2] + axis.direction[2],
            ]);
            let d = [tip[0] - a[0], tip[1] - a[1]];
            let (mut pos, mut neg) = (false, false);
            for p in outer_rings.iter().flatten() {
                let s = d[0] * (p[1] - a[1]) - d[1] * (p[0] - a[0]);
                pos |= s > 1e-9;
                neg |= s < -1e-9;
            }
            if pos && neg {
                report.push(format!("{path}/axis"), "revolve axis crosses the profile interior");
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn square_doc() -> SsrModelDoc {
        let mut lp = Loop::polygon(&[[0.0, 0.0], [1.0, 0.0], [1.0, 1.0], [0.0, 1.0]]);
        lp.start_point_tag = Some("v0".into());
        lp.segments[0].curve_tag = Some("c0".into());
        SsrModelDoc::single(
            "square",
            SsrTriplet {
                sketch: Sketch {
                    plane: PlaneFrame::xy(),
                    profiles: vec![Profile {
                        profile_tag: Some("p".into()),
                        loops: vec![lp],
                    }],
                },
                feature: SweepFeature::extrude(Extent::Single(1.0)),
                refinements: vec![],
            },
        )
    }

    #[test]
    fn unit_square_extrude_is_valid() {
        let report = validate_doc(&square_doc());
        assert!(report.is_valid(), "{:?}", report);
    }

    #[test]
    fn ops_length_mismatch() {
        let mut doc = square_doc();
        doc.ops.push(BooleanOp::Union);
        let report = validate_doc(&doc);
        assert_eq!(report.violations.len(), 1);
        assert!(report.violations[0].message.starts_with("ops length"));
    }

    #[test]
    fn unresolvable_entity_ref() {
        let mut doc = square_doc();
        doc.triplets[0].refinements.push(Refinement {
            kind: RefinementKind::Chamfer,
            magnitude: 0.1,
            entities: vec![EntityRef::new(CapType::Swept, "c9")],
        });
        let report = validate_doc(&doc);
        assert_eq!(report.violations.len(), 1);
        assert_eq!(report.violations[0].message, "unresolvable EntityRef c9");
        assert_eq!(report.violations[0].path, "/triplets/0/refinements/0/entities/0");
    }

    #[test]
    fn duplicate_tags_across_triplets() {
        let mut doc = square_doc();
        doc.triplets.push(doc.triplets[0].clone());
        doc.ops.push(BooleanOp::Union);
        let report = validate_doc(&doc);
        assert_eq!(report.violations.len(), 3, "{:?}", report.messages());
        assert!(report.violations.iter().all(|v| v.message.starts_with("duplicate tag")));
    }

    #[test]
    fn geometric_violations() {
        let mut doc = square_doc();
        let t = &mut doc.triplets[0];
        t.sketch.plane.normal = [0.0, 0.0, 2.0];
        t.sketch.profiles[0].loops.push(Loop::polygon(&[[2.0, 2.0], [3.0, 2.0], [3.0, 3.0]]));
        t.feature.extent = Extent::Pair([0.5, -0.5]);
        let msgs = validate_doc(&doc).messages().join("\n");
        assert!(msgs.contains("normal is not unit length"), "{msgs}");
        assert!(msgs.contains("hole is not strictly inside"), "{msgs}");
        assert!(msgs.contains("extrude total extent must be positive"), "{msgs}");
    }

    #[test]
    fn revolve_axis_through_profile() {
        let mut doc = square_doc();
        doc.triplets[0].feature = SweepFeature::revolve(
            Axis {
                point: [0.5, 0.0, 0.0],
                direction: [0.0, 1.0, 0.0],
            },
            Extent::Single(360.0),
        );
        let msgs = validate_doc(&doc).messages().join("\n");
        assert!(msgs.contains("crosses the profile interior"), "{msgs}");
    }

    #[test]
    fn bad_segment_shapes() {
        let mut doc = square_doc();
        let lp = &mut doc.triplets[0].sketch.profiles[0].loops[0];
        lp.segments[1].control_points.push([5.0, 5.0]);
        let msgs = validate_doc(&doc).messages().join("\n");
        assert!(msgs.contains("Line needs 2 points, has 3"), "{msgs}");
    }
}
