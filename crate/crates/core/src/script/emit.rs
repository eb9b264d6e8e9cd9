//! Script text from a model document.

use crate::model::{CapType, CurveKind, CurveSegment, Extent, Loop, SsrModelDoc, SweepKind};
use std::fmt::Write;

fn num(x: f64) -> String {
    format!("{x}")
}

fn quote(s: &str) -> String {
    let mut out = String::from("\"");
    for c in s.chars() {
        match c {
            '"' => out.push_str("\\\""),
            '\\' => out.push_str("\\\\"),
            '\n' => out.push_str("\\n"),
            '\t' => out.push_str("\\t"),
            c => out.push(c),
        }
    }
    out.push('"');
    out
}

fn vec3(v: [f64; 3]) -> String {
    format!("[{}, {}, {}]", num(v[0]), num(v[1]), num(v[2]))
}

fn pair(p: [f64; 2]) -> String {
    format!("({}, {})", num(p[0]), num(p[1]))
}

fn extent(e: &Extent) -> String {
    match *e {
        Extent::Single(d) => num(d),
        Extent::Pair([f, b]) => format!("({}, {})", num(f), num(b)),
    }
}

fn tags(out: &mut String, seg: &CurveSegment) {
    if let Some(t) = &seg.curve_tag {
        let _ = write!(out, ".curveTag({})", quote(t));
    }
    if let Some(t) = &seg.end_point_tag {
        let _ = write!(out, ".pointTag({})", quote(t));
    }
}

fn loop_chain(lp: &Loop) -> String {
    let mut out = String::from("Loop()");
    let Some(first) = lp.segments.first() else {
        return out;
    };
    let start = first.control_points.first().copied().unwrap_or([0.0, 0.0]);
    let _ = write!(out, ".moveTo({}, {})", num(start[0]), num(start[1]));
    if let Some(t) = &lp.start_point_tag {
        let _ = write!(out, ".pointTag({})", quote(t));
    }
    let n = lp.segments.len();
    for (i, seg) in lp.segments.iter().enumerate() {
        let p = &seg.control_points;
        let closing_line = i == n - 1 && lp.closed && seg.kind == CurveKind::Line && p[1] == start && p[0] != start;
        match seg.kind {
            CurveKind::Circle => {
                let _ = write!(out, ".circle({})", num(seg.radius.unwrap_or(0.0)));
            }
            _ if closing_line => out.push_str(".close()"),
            CurveKind::Line => {
                let _ = write!(out, ".lineTo({}, {})", num(p[1][0]), num(p[1][1]));
            }
            CurveKind::ThreePointArc => {
                let _ = write!(out, ".threePointArc({}, {})", pair(p[1]), pair(p[2]));
            }
            CurveKind::Spline => {
                let rest: Vec<String> = p[1..].iter().map(|q| pair(*q)).collect();
                let _ = write!(out, ".splineTo({})", rest.join(", "));
            }
        }
        tags(&mut out, seg);
    }
    let last = lp.segments.last().unwrap();
    let ends_closed = last.kind == CurveKind::Circle
        || (last.kind == CurveKind::Line && last.control_points[1] == start && last.control_points[0] != start);
    if lp.closed && !ends_closed {
        out.push_str(".close()");
    }
    out
}

/// Renders `doc` as a script whose lowering is structurally equal to `doc`.
pub fn emit(doc: &SsrModelDoc) -> String {
    let mut out = String::new();
    let _ = writeln!(out, "# {}", doc.doc_id.replace('\n', " "));
    if let Some(d) = &doc.description {
        for line in d.lines() {
            let _ = writeln!(out, "# {line}");
        }
    }
    for (ti, t) in doc.triplets.iter().enumerate() {
        let _ = writeln!(out, "\n# step {}", ti + 1);
        let mut profile_names = Vec::new();
        for (pi, profile) in t.sketch.profiles.iter().enumerate() {
            let mut loop_names = Vec::new();
            for (li, lp) in profile.loops.iter().enumerate() {
                let name = format!("loop{ti}_{pi}_{li}");
                let _ = writeln!(out, "{name} = {}", loop_chain(lp));
                loop_names.push(name);
            }
            let name = format!("profile{ti}_{pi}");
            let tag = profile.profile_tag.as_deref().map(quote).unwrap_or_default();
            let _ = writeln!(out, "{name} = Profile({tag})");
            if !loop_names.is_empty() {
                let _ = writeln!(out, "{name}.addLoop({})", loop_names.join(", "));
            }
            profile_names.push(name);
        }
        let pl = &t.sketch.plane;
        let _ = writeln!(
            out,
            "sketch{ti} = Sketch({{\"origin\": {}, \"x_axis\": {}, \"normal\": {}}})",
            vec3(pl.origin),
            vec3(pl.x_axis),
            vec3(pl.normal)
        );
        if !profile_names.is_empty() {
            let _ = writeln!(out, "sketch{ti}.addProfile({})", profile_names.join(", "));
        }
        match t.feature.kind {
            SweepKind::Extrude => {
                let _ = writeln!(out, "shape{ti} = Extrude(sketch{ti}, {})", extent(&t.feature.extent));
            }
            SweepKind::Revolve => {
                let axis = t.feature.axis.clone().unwrap_or(crate::model::Axis {
                    point: [0.0; 3],
                    direction: [0.0, 0.0, 1.0],
                });
                let _ = writeln!(
                    out,
                    "shape{ti} = Revolve(sketch{ti}, {{\"point\": {}, \"direction\": {}}}, {})",
                    vec3(axis.point),
                    vec3(axis.direction),
                    extent(&t.feature.extent)
                );
            }
        }
        for r in &t.refinements {
            let ents: Vec<String> = r
                .entities
                .iter()
                .map(|e| {
                    let cap = match e.cap_type {
                        CapType::Swept => "SWEEP",
                        other => other.as_str(),
                    };
                    format!("{{\"capType\": \"{cap}\", \"referenceId\": {}}}", quote(&e.reference_id))
                })
                .collect();
            let _ = writeln!(
                out,
                "shape{ti} = shape{ti}.{}({}, [{}])",
                r.kind.as_str(),
                num(r.magnitude),
                ents.join(", ")
            );
        }
    }
    let mut root = String::from("shape0");
    for (i, op) in doc.ops.iter().enumerate() {
        let m = match op {
            crate::model::BooleanOp::Union => "union",
            crate::model::BooleanOp::Cut => "cut",
            crate::model::BooleanOp::Intersect => "intersect",
        };
        let _ = write!(root, ".{m}(shape{})", i + 1);
    }
    let _ = writeln!(out, "\nresult = {root}");
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::*;
    use crate::script::{lower, parse};

    fn square_triplet() -> SsrTriplet {
        let mut lp = Loop::polygon(&[[0.0, 0.0], [1.0, 0.0], [1.0, 1.0], [0.0, 1.0]]);
        lp.start_point_tag = Some("v0".into());
        lp.segments[1].curve_tag = Some("c1".into());
        lp.segments[3].end_point_tag = Some("back".into());
        SsrTriplet {
            sketch: Sketch {
                plane: PlaneFrame::xy(),
                profiles: vec![Profile {
                    profile_tag: Some("p".into()),
                    loops: vec![lp],
                }],
            },
            feature: SweepFeature::extrude(Extent::Pair([0.75, 0.25])),
            refinements: vec![Refinement {
                kind: RefinementKind::Shell,
                magnitude: 0.1,
                entities: vec![EntityRef::new(CapType::End, "p")],
            }],
        }
    }

    fn round_trip(doc: &SsrModelDoc) -> SsrModelDoc {
        let text = emit(doc);
        lower(&parse(&text).unwrap_or_else(|d| panic!("{text}\n{d:?}"))).unwrap_or_else(|e| panic!("{text}\n{e}"))
    }

    #[test]
    fn square_round_trip() {
        let doc = SsrModelDoc::single("sq", square_triplet());
        let text = emit(&doc);
        assert!(text.contains(".close().pointTag(\"back\")"));
        assert!(text.contains("Shell(0.1, [{\"capType\": \"END\", \"referenceId\": \"p\"}])"));
        assert!(round_trip(&doc).same_structure(&doc));
    }

    #[test]
    fn arc_and_boolean_round_trip() {
        let arc = Loop::closed(vec![
            CurveSegment::line([0.0, 0.0], [2.0, 0.0]),
            CurveSegment::arc([2.0, 0.0], [1.0, 1.0], [0.0, 0.0]).with_curve_tag("dome"),
        ]);
        let mut second = square_triplet();
        second.sketch.profiles[0].loops = vec![arc];
        second.sketch.profiles[0].profile_tag = Some("q".into());
        second.refinements.clear();
        second.feature = SweepFeature::revolve(
            Axis {
                point: [0.0, -1.0, 0.0],
                direction: [1.0, 0.0, 0.0],
            },
            Extent::Single(90.0),
        );
        let doc = SsrModelDoc {
            doc_id: "two".into(),
            description: Some("first line\nsecond".into()),
            triplets: vec![square_triplet(), second],
            ops: vec![BooleanOp::Intersect],
        };
        let text = emit(&doc);
        assert!(text.contains(".threePointArc((1, 1), (0, 0)).curveTag(\"dome\")"));
        assert!(text.contains("result = shape0.intersect(shape1)"));
        assert!(round_trip(&doc).same_structure(&doc));
    }

    #[test]
    fn awkward_numbers_and_tags_survive() {
        let mut t = square_triplet();
        t.sketch.profiles[0].loops[0] = Loop::polygon(&[[0.1 + 0.2, 1e-7], [1.0 / 3.0, -0.0], [2.0, 1e300]]);
        t.sketch.profiles[0].profile_tag = Some("we\"ird\\tag".into());
        t.refinements.clear();
        let doc = SsrModelDoc::single("n", t);
        let back = round_trip(&doc);
        assert_eq!(back.triplets[0].sketch, doc.triplets[0].sketch);
    }
}
