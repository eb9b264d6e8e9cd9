//! Batch evaluation against reference models.

use crate::extract::{compile_folds, extract_script};
use crate::session::round_stem;
use crate::{Pipeline, PipelineError, SessionState};
use seekcad_core::kernel::LabeledMesh;
use seekcad_core::model::{read_doc, SsrModelDoc};
use seekcad_eval::{compare, g_score, novel, EvalConfig, EvalReport, GenerationResult, ItemReport, DEFAULT_RHO, DEFAULT_TAU};
use seekcad_render::{Raster, RenderSet};
use serde::{Deserialize, Serialize};
use std::path::Path;

/// One line of a test set: a description and its reference model, given
/// as script text or as a canonical document.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TestCase {
    pub id: String,
    pub description: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub gt_code: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub gt_doc: Option<serde_json::Value>,
}

pub fn read_test_set(text: &str) -> Result<Vec<TestCase>, PipelineError> {
    text.lines()
        .enumerate()
        .filter(|(_, l)| !l.trim().is_empty())
        .map(|(i, l)| serde_json::from_str(l).map_err(|e| PipelineError::InvalidRequest(format!("test set line {}: {e}", i + 1))))
        .collect()
}

#[derive(Debug, Clone)]
pub struct BatchOptions {
    pub k: usize,
    pub eval: EvalConfig,
    pub g_score: bool,
    /// Reference renders for the novelty check; skipped when `None`.
    pub novelty_corpus: Option<Vec<Raster>>,
}

impl Default for BatchOptions {
    fn default() -> Self {
        BatchOptions {
            k: 1,
            eval: EvalConfig::default(),
            g_score: false,
            novelty_corpus: None,
        }
    }
}

fn reference_doc(case: &TestCase) -> Result<SsrModelDoc, PipelineError> {
    let bad = |m: String| PipelineError::InvalidRequest(format!("test case {}: {m}", case.id));
    match (&case.gt_doc, &case.gt_code) {
        (Some(v), _) => read_doc(&serde_json::to_vec(v).expect("json value serializes")).map_err(|e| bad(e.to_string())),
        (None, Some(code)) => extract_script(code).map(|x| x.doc).map_err(|e| bad(e.to_string())),
        (None, None) => Err(bad("needs gt_code or gt_doc".into())),
    }
}

fn last_fold(doc: &SsrModelDoc, p: &Pipeline) -> Result<LabeledMesh, PipelineError> {
    Ok(compile_folds(doc, &p.config.render.tessellation)?.pop().expect("at least one fold"))
}

/// The round whose code a session produced: the accepted one, else the
/// last that compiled.
pub fn produced_round(st: &SessionState) -> Option<usize> {
    st.accepted_round
        .or_else(|| st.rounds.iter().rev().find(|r| r.compiled).map(|r| r.index))
}

fn final_image(p: &Pipeline, st: &SessionState, round: usize) -> Result<Raster, PipelineError> {
    let dir = st.rounds[round].render_dir.as_ref().ok_or_else(|| PipelineError::RenderFailed("round was not rendered".into()))?;
    let bytes = std::fs::read(p.store.dir(&st.session_id).join(dir).join("final.png"))?;
    Raster::decode_png(&bytes).map_err(|e| PipelineError::RenderFailed(e.to_string()))
}

fn score_generation(
    p: &Pipeline,
    case: &TestCase,
    gt: &LabeledMesh,
    st: &SessionState,
    round: usize,
    opts: &BatchOptions,
) -> Result<seekcad_eval::MetricReport, String> {
    let doc = p.store.read_doc(&st.session_id, &round_stem(round)).map_err(|e| e.to_string())?;
    let mesh = last_fold(&doc, p).map_err(|e| e.to_string())?;
    let mut m = compare(gt, &mesh, &opts.eval).map_err(|e| e.to_string())?;
    if opts.g_score || opts.novelty_corpus.is_some() {
        let img = final_image(p, st, round).map_err(|e| e.to_string())?;
        if opts.g_score {
            m.g_score = Some(g_score(&case.description, &img, p.vlm.as_ref()).map_err(|e| e.to_string())?);
        }
        if let Some(corpus) = &opts.novelty_corpus {
            let embedder = seekcad_clients::GrayEmbedder;
            m.novel = Some(novel(&img, corpus, &embedder, DEFAULT_TAU, DEFAULT_RHO).map_err(|e| e.to_string())?);
        }
    }
    Ok(m)
}

/// Runs `k` sessions per case. Failures are recorded per generation and
/// never stop the batch; only an unusable test set is an error.
pub fn evaluate_batch(p: &Pipeline, cases: &[TestCase], opts: &BatchOptions) -> Result<EvalReport, PipelineError> {
    if opts.k == 0 {
        return Err(PipelineError::InvalidRequest("k must be at least 1".into()));
    }
    let refs = cases
        .iter()
        .map(|c| last_fold(&reference_doc(c)?, p).map_err(|e| PipelineError::InvalidRequest(format!("test case {}: {e}", c.id))))
        .collect::<Result<Vec<_>, _>>()?;
    let mut items = Vec::with_capacity(cases.len());
    for (case, gt) in cases.iter().zip(&refs) {
        let mut generations = Vec::with_capacity(opts.k);
        for attempt in 0..opts.k {
            let g = match p.run_session(&case.description) {
                Err(e) => GenerationResult { compiled: false, error: Some(e.to_string()), metrics: None },
                Ok(st) => match produced_round(&st) {
                    None => GenerationResult {
                        compiled: false,
                        error: st.failure.as_ref().map(|f| format!("{:?}: {}", f.stage, f.message)),
                        metrics: None,
                    },
                    Some(round) => match score_generation(p, case, gt, &st, round, opts) {
                        Ok(m) => GenerationResult { compiled: true, error: None, metrics: Some(m) },
                        Err(e) => GenerationResult { compiled: true, error: Some(e), metrics: None },
                    },
                },
            };
            log::info!("{} attempt {}: compiled={}", case.id, attempt + 1, g.compiled);
            generations.push(g);
        }
        items.push(ItemReport {
            id: case.id.clone(),
            description: case.description.clone(),
            generations,
        });
    }
    EvalReport::new(opts.k, items).map_err(|e| PipelineError::InvalidRequest(e.to_string()))
}

pub fn write_report(report: &EvalReport, dir: &Path) -> Result<(), PipelineError> {
    report.write(dir).map_err(|e| PipelineError::Io(e.to_string()))
}

/// Final renders of corpus scripts, for the novelty reference set.
pub fn render_corpus(p: &Pipeline, codes: &[String]) -> Vec<Raster> {
    codes
        .iter()
        .filter_map(|c| {
            let doc = extract_script(c).ok()?.doc;
            let folds = compile_folds(&doc, &p.config.render.tessellation).ok()?;
            let set: RenderSet = seekcad_render::render_folds(&folds, &p.config.render).ok()?;
            Some(set.final_frame.image)
        })
        .collect()
}
