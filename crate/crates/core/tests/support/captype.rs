//! Runs the scripted CapType resolution suite in `fixtures/captype`.
//!
//! Every declared tag is resolved under START, END and SWEEP and compared with
//! the hand-labeled primitive in `expected.json` (kind plus bounding box).

use seekcad_core::kernel::{resolve_entity, EntityGeometry, EntityKind, KernelError, TessellationConfig, V3};
use seekcad_core::model::{CapType, EntityRef};
use seekcad_core::script::{lower, parse};
use serde_json::Value;
use std::path::Path;

const TOL: f64 = 1e-6;

#[derive(Debug, Default)]
pub struct SuiteReport {
    pub models: usize,
    pub resolved: usize,
    pub rejected: usize,
    pub failures: Vec<String>,
}

fn bbox(points: impl Iterator<Item = V3>) -> (V3, V3) {
    let mut lo = V3::repeat(f64::INFINITY);
    let mut hi = V3::repeat(f64::NEG_INFINITY);
    for p in points {
        lo = lo.inf(&p);
        hi = hi.sup(&p);
    }
    (lo, hi)
}

fn corner(v: &Value) -> V3 {
    let a: Vec<f64> = v.as_array().unwrap().iter().map(|x| x.as_f64().unwrap()).collect();
    V3::new(a[0], a[1], a[2])
}

pub fn run(dir: &Path) -> SuiteReport {
    let expected: Value = serde_json::from_str(&std::fs::read_to_string(dir.join("expected.json")).unwrap()).unwrap();
    let expected = expected.as_object().unwrap();
    let cfg = TessellationConfig::default();
    let mut report = SuiteReport::default();
    for (name, tags) in expected {
        report.models += 1;
        let text = std::fs::read_to_string(dir.join(format!("{name}.ssr"))).unwrap();
        let doc = match parse(&text).map_err(|d| format!("{d:?}")).and_then(|s| lower(&s).map_err(|e| e.to_string())) {
            Ok(doc) => doc,
            Err(e) => {
                report.failures.push(format!("{name}: {e}"));
                continue;
            }
        };
        let t = &doc.triplets[0];
        let mut declared: Vec<&str> = t.tags().into_iter().map(|(tag, _)| tag).collect();
        declared.sort();
        let mut labeled: Vec<&str> = tags.as_object().unwrap().keys().map(String::as_str).collect();
        labeled.sort();
        if declared != labeled {
            report.failures.push(format!("{name}: declared tags {declared:?} but labeled {labeled:?}"));
            continue;
        }
        for (tag, caps) in tags.as_object().unwrap() {
            for (key, cap) in [("START", CapType::Start), ("END", CapType::End), ("SWEEP", CapType::Swept)] {
                let want = &caps[key];
                let got = resolve_entity(&EntityRef::new(cap, tag.clone()), t, &cfg);
                let case = format!("{name} {tag}/{key}");
                match (want, got) {
                    (Value::Null, Err(KernelError::UnresolvableEntity { .. })) => report.rejected += 1,
                    (Value::Null, other) => report
                        .failures
                        .push(format!("{case}: expected rejection, got {:?}", other.map(|e| e.kind))),
                    (w, Err(e)) => report.failures.push(format!("{case}: expected {w}, got {e}")),
                    (w, Ok(entity)) => {
                        let (kind, bounds) = w.as_object().unwrap().iter().next().unwrap();
                        let want_kind = if kind == "edge" { EntityKind::Edge } else { EntityKind::Face };
                        let (lo, hi) = match &entity.geometry {
                            EntityGeometry::Polyline(p) => bbox(p.iter().copied()),
                            EntityGeometry::Triangles(t) => bbox(t.iter().flatten().copied()),
                        };
                        let (wlo, whi) = (corner(&bounds[0]), corner(&bounds[1]));
                        if entity.kind != want_kind || (lo - wlo).amax() > TOL || (hi - whi).amax() > TOL {
                            report.failures.push(format!(
                                "{case}: wrong geometry {:?} [{:?} .. {:?}], expected {kind} [{wlo:?} .. {whi:?}]",
                                entity.kind,
                                lo.as_slice(),
                                hi.as_slice()
                            ));
                        } else {
                            report.resolved += 1;
                        }
                    }
                }
            }
        }
    }
    report
}
