//! Every shipped sample script lowers, compiles to a watertight solid and
//! matches its JSON document. Set `SEEKCAD_BLESS=1` to rewrite the JSON.

use seekcad_core::kernel::{compile_model, mesh_volume, TessellationConfig};
use seekcad_core::model::{read_doc, validate_doc, write_doc, SsrModelDoc};
use seekcad_core::script::{emit, lower, parse};
use std::f64::consts::PI;
use std::path::PathBuf;

fn samples_dir() -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../../samples")
}

fn scripts() -> Vec<(String, String)> {
    let mut out: Vec<_> = std::fs::read_dir(samples_dir())
        .unwrap()
        .filter_map(|e| {
            let p = e.unwrap().path();
            (p.extension()? == "ssr").then(|| {
                let stem = p.file_stem().unwrap().to_string_lossy().to_string();
                (stem, std::fs::read_to_string(&p).unwrap())
            })
        })
        .collect();
    out.sort();
    out
}

fn lower_sample(name: &str, text: &str) -> SsrModelDoc {
    let script = parse(text).unwrap_or_else(|d| panic!("{name}: {d:?}"));
    let mut doc = lower(&script).unwrap_or_else(|e| panic!("{name}: {e}"));
    doc.doc_id = name.to_string();
    doc.description = text.lines().next().and_then(|l| l.strip_prefix("# ")).map(str::to_string);
    doc
}

#[test]
fn scripts_match_json_documents() {
    let bless = std::env::var_os("SEEKCAD_BLESS").is_some();
    let all = scripts();
    assert!(all.len() >= 10);
    for (name, text) in all {
        let doc = lower_sample(&name, &text);
        assert!(validate_doc(&doc).is_valid(), "{name}");
        let path = samples_dir().join(format!("{name}.json"));
        if bless {
            std::fs::write(&path, write_doc(&doc)).unwrap();
        }
        let stored = read_doc(&std::fs::read(&path).unwrap()).unwrap();
        assert_eq!(stored, doc, "{name}: JSON out of date");
    }
}

#[test]
fn every_sample_compiles_watertight() {
    let cfg = TessellationConfig::default();
    for (name, text) in scripts() {
        let doc = lower_sample(&name, &text);
        let mesh = compile_model(&doc, &cfg).unwrap_or_else(|e| panic!("{name}: {e:?}"));
        assert!(mesh.is_watertight(), "{name}");
        assert!(mesh.signed_volume() > 0.0, "{name}");
    }
}

#[test]
fn emitted_scripts_are_a_fixpoint() {
    for (name, text) in scripts() {
        let doc = lower_sample(&name, &text);
        let once = emit(&doc);
        let again = lower(&parse(&once).unwrap()).unwrap();
        assert!(again.same_structure(&doc), "{name}");
        let mut named = again.clone();
        named.doc_id = doc.doc_id.clone();
        named.description = doc.description.clone();
        assert_eq!(emit(&named), once, "{name}");
    }
}

fn volume_of(name: &str) -> f64 {
    let text = std::fs::read_to_string(samples_dir().join(format!("{name}.ssr"))).unwrap();
    let doc = lower_sample(name, &text);
    mesh_volume(&compile_model(&doc, &TessellationConfig::default()).unwrap()).unwrap()
}

/// Area of a regular n-gon inscribed in a circle of radius `r`.
fn ngon_area(n: f64, r: f64) -> f64 {
    0.5 * n * r * r * (2.0 * PI / n).sin()
}

#[test]
fn golden_volumes() {
    assert!((volume_of("cube") - 1.0).abs() < 1e-9);
    assert!((volume_of("chamfer_cube") - 0.98).abs() < 1e-6);
    assert!((volume_of("shell_box") - 0.424).abs() < 1e-6);
    assert!((volume_of("stepped_block") - (4.0 + 1.0 - 0.4 * 0.4 * 1.0)).abs() < 1e-9);
    // Polygonal cup: the inner wall is the 64-gon offset inward by 0.1.
    let inner_r = ((PI / 64.0).cos() - 0.1) / (PI / 64.0).cos();
    let cup = ngon_area(64.0, 1.0) * 1.5 - ngon_area(64.0, inner_r) * 1.4;
    assert!((volume_of("cup") - cup).abs() < 1e-9, "{} vs {cup}", volume_of("cup"));
    let slot = 3.0 + PI * 0.25;
    assert!((volume_of("slot") - slot * 0.5).abs() / (slot * 0.5) < 0.01);
}
