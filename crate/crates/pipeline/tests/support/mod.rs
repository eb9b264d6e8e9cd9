#![allow(dead_code)]

use seekcad::cons::KnowledgeConstraint;
use seekcad::{Pipeline, PipelineConfig, SessionStore};
use seekcad_clients::{HashingEmbedder, MockEntry, MockLlm, MockScript, MockVlm};
use seekcad_retrieval::{load_corpus, CorpusIndex};
use std::path::{Path, PathBuf};
use std::sync::Arc;

pub fn repo() -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../..")
}

pub fn sample(name: &str) -> String {
    std::fs::read_to_string(repo().join(format!("samples/{name}.ssr"))).unwrap()
}

/// Cube scaled by `s` along every axis.
pub fn cube_script(s: f64) -> String {
    format!(
        "face = Profile(\"p\")\nface.addLoop(Loop().moveTo(0, 0).lineTo({s}, 0).lineTo({s}, {s}).lineTo(0, {s}).close())\n\
         sk = Sketch({{\"origin\": [0, 0, 0], \"x_axis\": [1, 0, 0], \"normal\": [0, 0, 1]}})\nsk.addProfile(face)\nresult = Extrude(sk, {s})\n"
    )
}

/// A model reply: reasoning paragraphs, then the script in a fence.
pub fn reply(code: &str) -> String {
    format!("Step 1 draws the outline.\n\nStep 2 extrudes it.\n\n```python\n{code}```\n")
}

pub fn llm(code: &str) -> MockEntry {
    MockEntry::llm(reply(code)).with_reasoning("Draw the base outline.\n\nExtrude it upward.")
}

pub fn toy_index() -> CorpusIndex {
    let emb = HashingEmbedder::default();
    let mut idx = CorpusIndex::empty(&emb);
    idx.ingest(load_corpus(&repo().join("corpus/toy.jsonl")).unwrap(), &emb).unwrap();
    idx
}

pub fn pipeline(script: &MockScript, root: &Path, max_refine: usize) -> Pipeline {
    Pipeline {
        cons: KnowledgeConstraint::shipped(),
        config: PipelineConfig { max_refine, ..PipelineConfig::default() },
        llm: Arc::new(MockLlm(script.clone())),
        vlm: Arc::new(MockVlm(script.clone())),
        embedder: Arc::new(HashingEmbedder::default()),
        index: Some(Arc::new(toy_index())),
        store: SessionStore::new(root.join("sessions")),
    }
}
