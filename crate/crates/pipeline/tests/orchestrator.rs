mod support;

use seekcad::cons::{ConsError, KnowledgeConstraint, EXAMPLE_HEADER, FUNCTIONALITY_HEADER, SCHEMA_HEADER};
use seekcad::extract::extract_script;
use seekcad::{PipelineError, Stage, Status};
use seekcad_clients::{estimate_tokens, MockEntry, MockScript, Role, VerdictKind};
use seekcad_core::kernel::{compile_model, mesh_volume, TessellationConfig};
use support::*;

#[test]
fn system_prompt_has_three_parts_in_order() {
    let p = KnowledgeConstraint::shipped().system_prompt();
    let f = p.find(FUNCTIONALITY_HEADER).unwrap();
    let s = p.find(SCHEMA_HEADER).unwrap();
    let e = p.find(EXAMPLE_HEADER).unwrap();
    assert!(f < s && s < e);
    assert!(p[e..].contains("```python"));
    assert!(estimate_tokens(&p) <= 11_000, "{}", estimate_tokens(&p));
}

#[test]
fn knowledge_constraint_rejects_bad_parts() {
    let ex = KnowledgeConstraint::shipped().example_script().to_string();
    assert!(matches!(KnowledgeConstraint::new("", "schema", "d", &ex), Err(ConsError::EmptyPart(_))));
    assert!(matches!(KnowledgeConstraint::new("f", "  ", "d", &ex), Err(ConsError::EmptyPart(_))));
    assert!(matches!(KnowledgeConstraint::new("f", "s", "d", "result = Extrude(("), Err(ConsError::BadExample(_))));
    assert!(KnowledgeConstraint::new("f", "s", "d", &ex).is_ok());
}

#[test]
fn shipped_example_compiles() {
    let x = extract_script(KnowledgeConstraint::shipped().example_script()).unwrap();
    assert!(x.diagnostics.is_empty());
    let mesh = compile_model(&x.doc, &TessellationConfig::default()).unwrap();
    assert!(mesh.is_watertight());
    let plate = 2.0 * 1.0 * 0.5;
    let v = mesh_volume(&mesh).unwrap();
    assert!(v > plate && v < plate + std::f64::consts::PI * 0.09 * 0.4, "{v}");
}

#[test]
fn reply_outcomes() {
    let clean = extract_script(&reply(&sample("cube"))).unwrap();
    assert!(clean.diagnostics.iter().all(|d| d.severity != "error"));
    assert_eq!(clean.doc.triplets.len(), 1);

    let mut text = sample("cube");
    assert!(text.ends_with("Extrude(sk, 1)\n"));
    text.truncate(text.len() - 2);
    text.push('\n');
    let fixed = extract_script(&text).unwrap();
    assert_eq!(fixed.diagnostics.len(), 1, "{:?}", fixed.diagnostics);
    assert_eq!(fixed.diagnostics[0].severity, "warning");
    assert!(fixed.diagnostics[0].fix_applied);

    let prose = extract_script("I would start with a square and then extrude it by one unit.");
    match prose {
        Err(PipelineError::CompileFailed(m)) => assert!(m.contains("no script found"), "{m}"),
        other => panic!("{other:?}"),
    }
}

fn run(entries: Vec<MockEntry>, max_refine: usize) -> (seekcad::SessionState, MockScript, tempfile::TempDir, seekcad::Pipeline) {
    let dir = tempfile::tempdir().unwrap();
    let script = MockScript::new(entries);
    let p = pipeline(&script, dir.path(), max_refine);
    let st = p.run_session("unit cube").unwrap();
    (st, script, dir, p)
}

#[test]
fn aligned_and_unsure_need_no_refinement() {
    for (word, kind) in [("YES", VerdictKind::Aligned), ("UNSURE", VerdictKind::Unsure)] {
        let (st, script, ..) = run(vec![llm(&sample("cube")), MockEntry::vlm(word)], 1);
        assert_eq!(st.status, Status::Done);
        assert_eq!(st.refinements(), 0);
        assert_eq!(st.accepted_round, Some(0));
        assert!(st.indicator && !st.degraded);
        assert_eq!(st.rounds[0].verdict.as_ref().unwrap().kind, kind);
        assert_eq!((script.calls(Role::Llm), script.calls(Role::Vlm)), (1, 1));
    }
}

#[test]
fn misaligned_then_aligned_refines_once() {
    let (st, script, _dir, p) = run(
        vec![
            llm(&cube_script(2.0)),
            MockEntry::vlm("NO: step 1 is twice the requested size."),
            llm(&sample("cube")).matching("Visual feedback"),
            MockEntry::vlm("YES"),
        ],
        1,
    );
    assert_eq!(st.status, Status::Done);
    assert_eq!(st.refinements(), 1);
    assert_eq!(st.accepted_round, Some(1));
    assert!(st.indicator && !st.degraded);
    let refine = &script.log()[2].1;
    assert!(refine.contains("twice the requested size") && refine.contains("lineTo(2, 0)"));
    let d = p.store.dir(&st.session_id);
    for stem in ["round_0", "round_1"] {
        assert!(d.join(format!("code_{stem}.ssr")).is_file());
        assert!(d.join(format!("render_{stem}/final.png")).is_file());
    }
}

#[test]
fn misaligned_twice_keeps_first_round() {
    let (st, script, ..) = run(
        vec![
            llm(&cube_script(2.0)),
            MockEntry::vlm("NO: too big."),
            llm(&cube_script(3.0)),
            MockEntry::vlm("NO: still too big."),
        ],
        1,
    );
    assert_eq!(st.status, Status::Done);
    assert!(st.degraded && !st.indicator);
    assert_eq!(st.accepted_round, Some(0));
    assert_eq!(st.rounds.len(), 2);
    assert_eq!(st.latest_code(), Some(st.rounds[0].code.as_str()));
    assert_eq!(script.calls(Role::Vlm), 2);
}

#[test]
fn zero_refinements_skips_the_judge() {
    let (st, script, ..) = run(vec![llm(&sample("cube"))], 0);
    assert_eq!(st.status, Status::Done);
    assert_eq!(st.accepted_round, Some(0));
    assert_eq!(script.calls(Role::Vlm), 0);
}

#[test]
fn stage_failures_are_recorded() {
    let (st, ..) = run(vec![MockEntry::llm("A cube is a box with equal sides.")], 1);
    assert_eq!(st.status, Status::Failed);
    let f = st.failure.unwrap();
    assert_eq!((f.stage, f.code.as_str()), (Stage::Compile, "CompileFailed"));

    let (st, ..) = run(vec![llm(&sample("cube"))], 1);
    assert_eq!(st.status, Status::Failed);
    assert_eq!(st.failure.unwrap().stage, Stage::Judge);
    assert!(st.rounds[0].compiled);

    let (st, ..) = run(
        vec![llm(&cube_script(2.0)), MockEntry::vlm("NO: too big."), MockEntry::llm("Let me think again.")],
        1,
    );
    assert_eq!(st.status, Status::Done);
    assert!(st.degraded);
    assert_eq!(st.accepted_round, Some(0));
    assert_eq!(st.rounds[1].failure.as_ref().unwrap().stage, Stage::Compile);
}

#[test]
fn observer_sees_every_status() {
    let dir = tempfile::tempdir().unwrap();
    let script = MockScript::new(vec![
        llm(&cube_script(2.0)),
        MockEntry::vlm("NO: too big."),
        llm(&sample("cube")),
        MockEntry::vlm("YES"),
    ]);
    let p = pipeline(&script, dir.path(), 1);
    let mut seen = Vec::new();
    p.run_session_with_id("s1", "unit cube", &mut |s| {
        if seen.last() != Some(&s.status) {
            seen.push(s.status)
        }
    })
    .unwrap();
    use Status::*;
    assert_eq!(seen, vec![Generating, Rendering, Judging, Refining, Rendering, Judging, Done]);
}

#[test]
fn retrieval_hits_reach_the_prompt() {
    let (st, script, ..) = run(vec![llm(&sample("cube")), MockEntry::vlm("YES")], 1);
    assert_eq!(st.hits.len(), 3);
    assert_eq!(st.hits[0].entry_id, "t1");
    let prompt = &script.log()[0].1;
    assert!(prompt.contains("Query: unit cube\n"));
    assert!(prompt.contains("Description: unit cube\nCAD code:"));
}

#[test]
fn empty_query_is_rejected() {
    let dir = tempfile::tempdir().unwrap();
    let p = pipeline(&MockScript::new(vec![]), dir.path(), 1);
    assert!(matches!(p.run_session("   "), Err(PipelineError::InvalidRequest(_))));
}

const SAMPLES: [&str; 5] = ["cube", "cup", "flange", "l_bracket", "slot"];

proptest::proptest! {
    #![proptest_config(proptest::prelude::ProptestConfig::with_cases(64))]

    #[test]
    fn fenced_replies_extract_like_bare_scripts(which in 0..SAMPLES.len(), preamble in "[A-Za-z ,.]{0,80}") {
        let code = sample(SAMPLES[which]);
        let bare = extract_script(&code).unwrap();
        let wrapped = extract_script(&format!("{preamble}\n\n```python\n{code}```\nDone.")).unwrap();
        proptest::prop_assert_eq!(wrapped.doc, bare.doc);
    }

    #[test]
    fn extraction_never_panics(text in "\\PC{0,200}") {
        let _ = extract_script(&text);
    }
}
