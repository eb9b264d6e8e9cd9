//! Session records and their on-disk layout.
//!
//! ```text
//! <root>/<session_id>/
//!   session.json
//!   code_round_<k>.ssr   doc_round_<k>.json   render_round_<k>/
//!   code_edit_<j>.ssr    doc_edit_<j>.json    render_edit_<j>/
//! ```
//!
//! Everything except `session.json` is written once and never modified.

use crate::extract::DiagnosticRecord;
use crate::{PipelineError, StageFailure};
use seekcad_clients::Verdict;
use seekcad_core::model::{read_doc, write_doc, SsrModelDoc};
use seekcad_render::{render_steps, write_render_set, RenderConfig, RenderSet};
use serde::{Deserialize, Serialize};
use std::io::Write;
use std::path::{Path, PathBuf};

pub const SESSION_FILE: &str = "session.json";

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Status {
    Generating,
    Rendering,
    Judging,
    Refining,
    Done,
    Failed,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HitRecord {
    pub entry_id: String,
    pub description: String,
    pub g_vec: f64,
    pub g_full: f64,
    pub g_final: f64,
}

/// One generated script (`I_k`) and what happened to it.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Round {
    pub index: usize,
    pub prompt_tokens: usize,
    pub raw_reply: String,
    /// Repaired script; empty when nothing could be extracted.
    pub code: String,
    pub diagnostics: Vec<DiagnosticRecord>,
    pub cot: Vec<String>,
    pub compiled: bool,
    pub triplets: usize,
    pub render_dir: Option<String>,
    pub verdict: Option<Verdict>,
    pub failure: Option<StageFailure>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EditTurn {
    pub index: usize,
    pub instruction: String,
    pub base_code: String,
    pub result_code: String,
    pub cot: Vec<String>,
    pub diagnostics: Vec<DiagnosticRecord>,
    pub triplets: usize,
    pub render_dir: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SessionState {
    pub session_id: String,
    pub query: String,
    pub max_refine: usize,
    pub status: Status,
    /// Set when the accepted code is not the last round's.
    pub degraded: bool,
    /// The alignment indicator: a judge accepted the latest round.
    pub indicator: bool,
    pub hits: Vec<HitRecord>,
    pub rounds: Vec<Round>,
    pub accepted_round: Option<usize>,
    pub edits: Vec<EditTurn>,
    pub failure: Option<StageFailure>,
}

impl SessionState {
    pub fn new(session_id: impl Into<String>, query: impl Into<String>, max_refine: usize) -> Self {
        SessionState {
            session_id: session_id.into(),
            query: query.into(),
            max_refine,
            status: Status::Generating,
            degraded: false,
            indicator: false,
            hits: Vec::new(),
            rounds: Vec::new(),
            accepted_round: None,
            edits: Vec::new(),
            failure: None,
        }
    }

    pub fn refinements(&self) -> usize {
        self.rounds.len().saturating_sub(1)
    }

    /// Code the user currently holds: the last edit, else the accepted round.
    pub fn latest_code(&self) -> Option<&str> {
        match self.edits.last() {
            Some(e) => Some(&e.result_code),
            None => self.accepted_round.map(|k| self.rounds[k].code.as_str()),
        }
    }

    /// Artifact stem (`round_<k>` or `edit_<j>`) matching [`latest_code`](Self::latest_code).
    pub fn latest_artifact(&self) -> Option<String> {
        match self.edits.last() {
            Some(e) => Some(format!("edit_{}", e.index)),
            None => self.accepted_round.map(|k| format!("round_{k}")),
        }
    }
}

pub fn round_stem(k: usize) -> String {
    format!("round_{k}")
}

pub fn edit_stem(j: usize) -> String {
    format!("edit_{j}")
}

#[derive(Debug, Clone)]
pub struct SessionStore {
    root: PathBuf,
}

fn write_new(path: &Path, bytes: &[u8]) -> Result<(), PipelineError> {
    let mut f = std::fs::OpenOptions::new()
        .write(true)
        .create_new(true)
        .open(path)
        .map_err(|e| PipelineError::Io(format!("{}: {e}", path.display())))?;
    f.write_all(bytes)?;
    Ok(())
}

impl SessionStore {
    pub fn new(root: impl Into<PathBuf>) -> Self {
        SessionStore { root: root.into() }
    }

    pub fn root(&self) -> &Path {
        &self.root
    }

    pub fn dir(&self, id: &str) -> PathBuf {
        self.root.join(id)
    }

    fn checked_dir(&self, id: &str) -> Result<PathBuf, PipelineError> {
        let ok = !id.is_empty() && id.chars().all(|c| c.is_ascii_alphanumeric() || c == '-' || c == '_');
        let dir = self.dir(id);
        if !ok || !dir.join(SESSION_FILE).is_file() {
            return Err(PipelineError::NotFound(id.to_string()));
        }
        Ok(dir)
    }

    pub fn create(&self, state: &SessionState) -> Result<(), PipelineError> {
        std::fs::create_dir_all(self.dir(&state.session_id))?;
        self.save(state)
    }

    pub fn save(&self, state: &SessionState) -> Result<(), PipelineError> {
        let dir = self.dir(&state.session_id);
        let tmp = dir.join(format!("{SESSION_FILE}.tmp"));
        std::fs::write(&tmp, serde_json::to_vec_pretty(state).expect("state serializes"))?;
        std::fs::rename(tmp, dir.join(SESSION_FILE))?;
        Ok(())
    }

    pub fn load(&self, id: &str) -> Result<SessionState, PipelineError> {
        let path = self.checked_dir(id)?.join(SESSION_FILE);
        let bytes = std::fs::read(&path)?;
        serde_json::from_slice(&bytes).map_err(|e| PipelineError::Io(format!("{}: {e}", path.display())))
    }

    pub fn list(&self) -> Vec<String> {
        let mut ids: Vec<String> = std::fs::read_dir(&self.root)
            .into_iter()
            .flatten()
            .flatten()
            .filter(|e| e.path().join(SESSION_FILE).is_file())
            .filter_map(|e| e.file_name().to_str().map(str::to_string))
            .collect();
        ids.sort();
        ids
    }

    /// Writes `code_<stem>.ssr` and `doc_<stem>.json`.
    pub fn write_code(&self, id: &str, stem: &str, code: &str, doc: &SsrModelDoc) -> Result<(), PipelineError> {
        let dir = self.dir(id);
        write_new(&dir.join(format!("code_{stem}.ssr")), code.as_bytes())?;
        write_new(&dir.join(format!("doc_{stem}.json")), &write_doc(doc))
    }

    /// Writes `render_<stem>/` and returns its name.
    pub fn write_render(&self, id: &str, stem: &str, set: &RenderSet) -> Result<String, PipelineError> {
        let name = format!("render_{stem}");
        let dir = self.dir(id).join(&name);
        if dir.exists() {
            return Err(PipelineError::Io(format!("{} already exists", dir.display())));
        }
        write_render_set(set, &dir).map_err(|e| PipelineError::RenderFailed(e.to_string()))?;
        Ok(name)
    }

    pub fn read_doc(&self, id: &str, stem: &str) -> Result<SsrModelDoc, PipelineError> {
        let path = self.checked_dir(id)?.join(format!("doc_{stem}.json"));
        let bytes = std::fs::read(&path).map_err(|e| PipelineError::Io(format!("{}: {e}", path.display())))?;
        read_doc(&bytes).map_err(|e| PipelineError::Io(format!("{}: {e}", path.display())))
    }

    /// Renders every stored round and edit again from its document into
    /// `out/<render dir>`, without any model calls.
    pub fn rerender(&self, id: &str, cfg: &RenderConfig, out: &Path) -> Result<Vec<String>, PipelineError> {
        let state = self.load(id)?;
        let mut jobs: Vec<(String, String)> = state
            .rounds
            .iter()
            .filter_map(|r| r.render_dir.clone().map(|d| (round_stem(r.index), d)))
            .collect();
        jobs.extend(state.edits.iter().map(|e| (edit_stem(e.index), e.render_dir.clone())));
        for (stem, dir) in &jobs {
            let doc = self.read_doc(id, stem)?;
            let set = render_steps(&doc, cfg).map_err(|e| PipelineError::RenderFailed(e.to_string()))?;
            write_render_set(&set, &out.join(dir)).map_err(|e| PipelineError::RenderFailed(e.to_string()))?;
        }
        Ok(jobs.into_iter().map(|(_, d)| d).collect())
    }
}
