//! The generate, render, judge and refine loop.

use crate::cons::KnowledgeConstraint;
use crate::extract::{compile_folds, extract_script, Extracted};
use crate::session::{edit_stem, round_stem, EditTurn, HitRecord, Round, SessionState, SessionStore, Status};
use crate::{PipelineError, Stage};
use seekcad_clients::{
    judge_alignment, ChatRequest, ChatResponse, EmbeddingClient, LlmClient, Verdict, VerdictKind, VlmClient,
    DEFAULT_JUDGE_TEMPLATE,
};
use seekcad_core::kernel::LabeledMesh;
use seekcad_render::{render_folds, Raster, RenderConfig, RenderSet};
use seekcad_retrieval::{build_chunks, CorpusIndex, RetrievalHit, DEFAULT_K, DEFAULT_LAMBDA};
use std::sync::Arc;

#[derive(Debug, Clone)]
pub struct PipelineConfig {
    pub k: usize,
    pub lambda: f64,
    pub max_refine: usize,
    pub temperature: f64,
    pub top_p: f64,
    pub max_context_tokens: usize,
    pub reply_reserve: usize,
    pub render: RenderConfig,
    pub judge_template: String,
}

impl Default for PipelineConfig {
    fn default() -> Self {
        PipelineConfig {
            k: DEFAULT_K,
            lambda: DEFAULT_LAMBDA,
            max_refine: 1,
            temperature: 0.7,
            top_p: 0.8,
            max_context_tokens: 15_000,
            reply_reserve: 4_000,
            render: RenderConfig::default(),
            judge_template: DEFAULT_JUDGE_TEMPLATE.to_string(),
        }
    }
}

pub struct Pipeline {
    pub cons: KnowledgeConstraint,
    pub config: PipelineConfig,
    pub llm: Arc<dyn LlmClient>,
    pub vlm: Arc<dyn VlmClient>,
    pub embedder: Arc<dyn EmbeddingClient>,
    pub index: Option<Arc<CorpusIndex>>,
    pub store: SessionStore,
}

/// A reply that made it through extraction, compilation and rendering.
pub struct Built {
    pub response: ChatResponse,
    pub extracted: Extracted,
    pub folds: Vec<LabeledMesh>,
    pub renders: RenderSet,
}

/// A failed attempt, with whatever was produced before the failure.
pub struct Attempt {
    pub response: Option<ChatResponse>,
    pub extracted: Option<Extracted>,
    pub error: PipelineError,
    pub stage: Stage,
}

struct Tracker<'a> {
    store: &'a SessionStore,
    observer: &'a mut dyn FnMut(&SessionState),
}

impl Tracker<'_> {
    fn set(&mut self, st: &mut SessionState, status: Status) -> Result<(), PipelineError> {
        st.status = status;
        self.store.save(st)?;
        (self.observer)(st);
        Ok(())
    }
}

pub fn new_session_id() -> String {
    uuid::Uuid::new_v4().simple().to_string()
}

pub fn initial_prompt(query: &str, hits: &[RetrievalHit]) -> String {
    if hits.is_empty() {
        format!("Query: {}\n", query.trim())
    } else {
        build_chunks(query, hits)
    }
}

pub fn refine_prompt(query: &str, previous_code: &str, statement: &str) -> String {
    format!(
        "Query: {}\n\nPrevious CAD code:\n```python\n{}\n```\n\nVisual feedback: {}\n\n\
         Correct the code so the model matches the query and resolves the feedback. \
         Reply with the complete corrected script.\n",
        query.trim(),
        previous_code.trim_end(),
        statement.trim()
    )
}

pub fn edit_prompt(base_code: &str, instruction: &str) -> String {
    format!(
        "Current CAD code:\n```python\n{}\n```\n\nModification: {}\n\n\
         Apply the modification and reply with the complete modified script.\n",
        base_code.trim_end(),
        instruction.trim()
    )
}

impl Pipeline {
    pub fn request(&self, user: String) -> ChatRequest {
        let mut req = ChatRequest::new(self.cons.system_prompt(), user);
        req.temperature = self.config.temperature;
        req.top_p = self.config.top_p;
        req.max_context_tokens = self.config.max_context_tokens;
        req.reply_reserve = self.config.reply_reserve;
        req
    }

    /// Top hits for `query`; none when no corpus is loaded.
    pub fn retrieve(&self, query: &str) -> Result<Vec<RetrievalHit>, PipelineError> {
        match &self.index {
            Some(idx) if !idx.is_empty() => idx
                .hybrid_search(query, self.config.k, self.config.lambda, self.embedder.as_ref())
                .map_err(|e| PipelineError::Retrieval(e.to_string())),
            _ => Ok(Vec::new()),
        }
    }

    /// Sends one prompt and carries the reply through to rendered steps.
    pub fn build(&self, user: String) -> Result<Built, Attempt> {
        let fail = |stage, error, response, extracted| Attempt { response, extracted, error, stage };
        let response = self
            .llm
            .chat(&self.request(user))
            .map_err(|e| fail(Stage::Generate, e.into(), None, None))?;
        let extracted = match extract_script(&response.answer) {
            Ok(x) => x,
            Err(e) => return Err(fail(Stage::Compile, e, Some(response), None)),
        };
        let folds = match compile_folds(&extracted.doc, &self.config.render.tessellation) {
            Ok(f) => f,
            Err(e) => return Err(fail(Stage::Compile, e, Some(response), Some(extracted))),
        };
        let renders = match render_folds(&folds, &self.config.render) {
            Ok(r) => r,
            Err(e) => {
                let err = PipelineError::RenderFailed(e.to_string());
                return Err(fail(Stage::Render, err, Some(response), Some(extracted)));
            }
        };
        Ok(Built { response, extracted, folds, renders })
    }

    pub fn judge(&self, renders: &RenderSet, cot: &[String]) -> Result<Verdict, PipelineError> {
        let images: Vec<Raster> = renders.images().into_iter().cloned().collect();
        Ok(judge_alignment(self.vlm.as_ref(), &images, cot, &self.config.judge_template)?)
    }

    pub fn run_session(&self, query: &str) -> Result<SessionState, PipelineError> {
        self.run_session_with_id(&new_session_id(), query, &mut |_| {})
    }

    /// Runs the full loop, persisting and reporting every status change.
    /// Stage failures end in a `Failed` or degraded `Done` state; only
    /// invalid input and storage errors are returned as `Err`.
    pub fn run_session_with_id(
        &self,
        id: &str,
        query: &str,
        observer: &mut dyn FnMut(&SessionState),
    ) -> Result<SessionState, PipelineError> {
        if query.trim().is_empty() {
            return Err(PipelineError::InvalidRequest("query is empty".into()));
        }
        let mut st = SessionState::new(id, query.trim(), self.config.max_refine);
        self.store.create(&st)?;
        observer(&st);
        let mut t = Tracker { store: &self.store, observer };

        let hits = match self.retrieve(&st.query) {
            Ok(h) => h,
            Err(e) => {
                st.failure = Some(e.at(Stage::Retrieve));
                t.set(&mut st, Status::Failed)?;
                return Ok(st);
            }
        };
        st.hits = hits
            .iter()
            .map(|h| HitRecord {
                entry_id: h.entry.entry_id.clone(),
                description: h.entry.description.clone(),
                g_vec: h.g_vec,
                g_full: h.g_full,
                g_final: h.g_final,
            })
            .collect();

        let prompt = initial_prompt(&st.query, &hits);
        let mut renders = match self.round(&mut st, &mut t, prompt)? {
            Ok(r) => r,
            Err(()) => {
                t.set(&mut st, Status::Failed)?;
                return Ok(st);
            }
        };
        let mut k = 0;
        loop {
            if self.config.max_refine == 0 {
                st.accepted_round = Some(k);
                break;
            }
            t.set(&mut st, Status::Judging)?;
            let verdict = match self.judge(&renders, &st.rounds[k].cot) {
                Ok(v) => v,
                Err(e) => {
                    st.rounds[k].failure = Some(e.at(Stage::Judge));
                    if k == 0 {
                        st.failure = Some(e.at(Stage::Judge));
                        t.set(&mut st, Status::Failed)?;
                        return Ok(st);
                    }
                    st.accepted_round = Some(k - 1);
                    st.degraded = true;
                    break;
                }
            };
            st.rounds[k].verdict = Some(verdict.clone());
            if verdict.kind != VerdictKind::Misaligned {
                st.indicator = true;
                st.accepted_round = Some(k);
                break;
            }
            if k >= self.config.max_refine {
                // Still misaligned at the round limit: fall back to the code it was meant to fix.
                st.accepted_round = Some(k - 1);
                st.degraded = true;
                break;
            }
            t.set(&mut st, Status::Refining)?;
            let prompt = refine_prompt(&st.query, &st.rounds[k].code, &verdict.statement);
            match self.round(&mut st, &mut t, prompt)? {
                Ok(r) => {
                    renders = r;
                    k += 1;
                }
                Err(()) => {
                    st.accepted_round = Some(k);
                    st.degraded = true;
                    break;
                }
            }
        }
        t.set(&mut st, Status::Done)?;
        Ok(st)
    }

    /// Generates, compiles and renders one round and records it. The inner
    /// `Err` means the round failed and was recorded as such.
    fn round(
        &self,
        st: &mut SessionState,
        t: &mut Tracker,
        prompt: String,
    ) -> Result<Result<RenderSet, ()>, PipelineError> {
        let index = st.rounds.len();
        let prompt_tokens = self.request(prompt.clone()).prompt_tokens();
        match self.build(prompt) {
            Ok(b) => {
                let stem = round_stem(index);
                self.store.write_code(&st.session_id, &stem, &b.extracted.code, &b.extracted.doc)?;
                t.set(st, Status::Rendering)?;
                let dir = self.store.write_render(&st.session_id, &stem, &b.renders)?;
                st.rounds.push(Round {
                    index,
                    prompt_tokens,
                    raw_reply: b.response.answer.clone(),
                    code: b.extracted.code.clone(),
                    diagnostics: b.extracted.diagnostics.clone(),
                    cot: b.response.cot.clone(),
                    compiled: true,
                    triplets: b.folds.len(),
                    render_dir: Some(dir),
                    verdict: None,
                    failure: None,
                });
                self.store.save(st)?;
                Ok(Ok(b.renders))
            }
            Err(a) => {
                let stage = if index > 0 && a.stage == Stage::Generate { Stage::Refine } else { a.stage };
                let failure = a.error.at(stage);
                st.rounds.push(Round {
                    index,
                    prompt_tokens,
                    raw_reply: a.response.as_ref().map(|r| r.answer.clone()).unwrap_or_default(),
                    code: a.extracted.as_ref().map(|x| x.code.clone()).unwrap_or_default(),
                    diagnostics: a.extracted.map(|x| x.diagnostics).unwrap_or_default(),
                    cot: a.response.map(|r| r.cot).unwrap_or_default(),
                    compiled: false,
                    triplets: 0,
                    render_dir: None,
                    verdict: None,
                    failure: Some(failure.clone()),
                });
                if index == 0 {
                    st.failure = Some(failure);
                }
                self.store.save(st)?;
                Ok(Err(()))
            }
        }
    }

    /// Applies a modification to the session's latest code. A failed turn
    /// leaves the stored session untouched.
    pub fn edit_session(&self, id: &str, instruction: &str) -> Result<EditTurn, PipelineError> {
        if instruction.trim().is_empty() {
            return Err(PipelineError::InvalidRequest("instruction is empty".into()));
        }
        let mut st = self.store.load(id)?;
        if st.status != Status::Done {
            return Err(PipelineError::NotReady(st.status));
        }
        let base = st
            .latest_code()
            .ok_or_else(|| PipelineError::InvalidRequest("session has no accepted code".into()))?
            .to_string();
        let b = self.build(edit_prompt(&base, instruction)).map_err(|a| a.error)?;
        let index = st.edits.len();
        let stem = edit_stem(index);
        self.store.write_code(id, &stem, &b.extracted.code, &b.extracted.doc)?;
        let render_dir = self.store.write_render(id, &stem, &b.renders)?;
        let turn = EditTurn {
            index,
            instruction: instruction.trim().to_string(),
            base_code: base,
            result_code: b.extracted.code,
            cot: b.response.cot,
            diagnostics: b.extracted.diagnostics,
            triplets: b.folds.len(),
            render_dir,
        };
        st.edits.push(turn.clone());
        self.store.save(&st)?;
        Ok(turn)
    }

    /// Mesh of the session's latest code.
    pub fn session_mesh(&self, id: &str) -> Result<LabeledMesh, PipelineError> {
        let st = self.store.load(id)?;
        let stem = st
            .latest_artifact()
            .ok_or_else(|| PipelineError::NotReady(st.status))?;
        let doc = self.store.read_doc(id, &stem)?;
        let folds = compile_folds(&doc, &self.config.render.tessellation)?;
        Ok(folds.into_iter().last().expect("compiled documents have a fold"))
    }
}
