use seekcad_core::kernel::{compile_model, compile_steps, LabeledMesh};
use seekcad_core::model::{read_doc, SsrModelDoc};
use seekcad_render::*;
use std::path::PathBuf;

fn samples() -> Vec<(String, SsrModelDoc)> {
    let dir = PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../../samples");
    let mut out: Vec<_> = std::fs::read_dir(&dir)
        .unwrap()
        .map(|e| e.unwrap().path())
        .filter(|p| p.extension().is_some_and(|e| e == "json"))
        .map(|p| {
            let name = p.file_stem().unwrap().to_string_lossy().to_string();
            (name, read_doc(&std::fs::read(&p).unwrap()).unwrap())
        })
        .collect();
    out.sort_by(|a, b| a.0.cmp(&b.0));
    out
}

fn sample(name: &str) -> SsrModelDoc {
    samples().into_iter().find(|(n, _)| n == name).unwrap().1
}

fn small() -> RenderConfig {
    RenderConfig {
        width: 160,
        height: 128,
        ..RenderConfig::default()
    }
}

/// Opaque highlight is the only palette entry with an empty blue channel.
fn is_pure_highlight(c: [u8; 3]) -> bool {
    c[2] == 0 && c[0] > 0
}

fn coverage(f: &Frame, bg: [u8; 3]) -> Vec<bool> {
    f.image.pixels.iter().map(|&c| c != bg).collect()
}

#[test]
fn unit_cube_fills_a_sane_share_of_the_frame() {
    let cfg = RenderConfig::default();
    let mesh = compile_model(&sample("cube"), &cfg.tessellation).unwrap();
    let frame = render_single(&mesh, &cfg).unwrap();
    let covered = coverage(&frame, cfg.background).iter().filter(|&&c| c).count();
    let share = covered as f64 / (512.0 * 512.0);
    assert!(share > 0.05 && share < 0.80, "{share}");
    // Three faces are visible, each with its own shade.
    let mut shades: Vec<[u8; 3]> = frame.image.pixels.iter().copied().filter(|&c| c != cfg.background).collect();
    shades.sort();
    shades.dedup();
    assert_eq!(shades.len(), 3, "{shades:?}");
}

#[test]
fn rendering_is_byte_deterministic() {
    let cfg = small();
    let mesh = compile_model(&sample("knob"), &cfg.tessellation).unwrap();
    let a = render_single(&mesh, &cfg).unwrap().image.encode_png();
    let b = render_single(&mesh, &cfg).unwrap().image.encode_png();
    assert_eq!(a, b);
}

#[test]
fn uniform_scaling_does_not_change_the_image() {
    let cfg = small();
    let mesh = compile_model(&sample("l_bracket"), &cfg.tessellation).unwrap();
    let big: LabeledMesh = mesh.scaled(1000.0);
    assert_eq!(render_single(&mesh, &cfg).unwrap().image, render_single(&big, &cfg).unwrap().image);
}

#[test]
fn every_sample_gets_one_image_per_triplet_plus_final() {
    let cfg = small();
    for (name, doc) in samples() {
        let a = render_steps(&doc, &cfg).unwrap();
        assert_eq!(a.steps.len(), doc.triplets.len(), "{name}");
        assert_eq!(a.images().len(), doc.triplets.len() + 1, "{name}");
        let b = render_steps(&doc, &cfg).unwrap();
        let bytes = |s: &RenderSet| s.images().iter().map(|r| r.encode_png()).collect::<Vec<_>>();
        assert_eq!(bytes(&a), bytes(&b), "{name}");
    }
}

#[test]
fn highlight_pixels_come_only_from_the_current_triplet() {
    let cfg = small();
    for (name, doc) in samples() {
        let folds = compile_steps(&doc, &cfg.tessellation).unwrap();
        let set = render_folds(&folds, &cfg).unwrap();
        for (k, frame) in set.steps.iter().enumerate() {
            let ids = id_buffer(&folds[k], &set.camera, &cfg);
            for (px, &c) in frame.image.pixels.iter().enumerate() {
                let pure = is_pure_highlight(c);
                assert_eq!(pure, frame.kinds[px] == PixelKind::Highlight, "{name} step {k} pixel {px}");
                if pure {
                    assert_eq!(ids[px], Some(k), "{name} step {k} pixel {px}");
                }
            }
        }
        assert!(set.final_frame.image.pixels.iter().all(|&c| !is_pure_highlight(c)), "{name}");
    }
}

#[test]
fn single_triplet_step_matches_final_silhouette() {
    let cfg = small();
    let set = render_steps(&sample("chamfer_cube"), &cfg).unwrap();
    let step = &set.steps[0];
    assert_eq!(coverage(step, cfg.background), coverage(&set.final_frame, cfg.background));
    assert_eq!(step.count(PixelKind::Dimmed), 0);
    assert!(step.count(PixelKind::Highlight) > 0);
    assert_ne!(step.image, set.final_frame.image);
}

#[test]
fn later_steps_show_highlight_over_dimmed_context() {
    let cfg = small();
    for name in ["l_bracket", "stepped_block", "flange"] {
        let set = render_steps(&sample(name), &cfg).unwrap();
        for (k, step) in set.steps.iter().enumerate().skip(1) {
            assert!(step.image.pixels.iter().any(|&c| is_pure_highlight(c)), "{name} step {k}");
            assert!(step.count(PixelKind::Dimmed) > 0, "{name} step {k}");
        }
    }
}

#[test]
fn config_limits() {
    let mesh = compile_model(&sample("cube"), &Default::default()).unwrap();
    for cfg in [
        RenderConfig { dim_alpha: 0.0, ..small() },
        RenderConfig { dim_alpha: 1.0, ..small() },
        RenderConfig { width: 63, ..small() },
    ] {
        assert!(matches!(render_single(&mesh, &cfg), Err(RenderError::InvalidConfig(_))));
    }
    assert!(matches!(render_single(&LabeledMesh::default(), &small()), Err(RenderError::EmptyModel)));
}

#[test]
fn render_directory_round_trips() {
    let cfg = small();
    let set = render_steps(&sample("stepped_block"), &cfg).unwrap();
    let dir = tempfile::tempdir().unwrap();
    let index = write_render_set(&set, dir.path()).unwrap();
    let names: Vec<_> = index.iter().map(|e| e.file.as_str()).collect();
    assert_eq!(names, ["step_000.png", "step_001.png", "step_002.png", "final.png"]);
    let back = read_render_dir(dir.path()).unwrap();
    assert_eq!(back.len(), 4);
    for ((entry, raster), original) in back.iter().zip(set.images()) {
        assert_eq!(raster, original, "{}", entry.file);
    }
    assert_eq!(back[1].0.triplet_index, Some(1));
    assert_eq!(back[3].0.triplet_index, None);
}
