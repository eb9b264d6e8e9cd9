//! HTTP session API.
//!
//! | method | path | body / reply |
//! |---|---|---|
//! | POST | `/api/sessions` | `{query}` → `{session_id}` (runs in the background) |
//! | GET | `/api/sessions/{id}` | session summary |
//! | GET | `/api/sessions/{id}/steps[?round=k or ?edit=j]` | `[{image_url, code_excerpt, cot_segment, verdict, ...}]` |
//! | POST | `/api/sessions/{id}/edits` | `{instruction}` → edit summary |
//! | GET | `/api/sessions/{id}/mesh` | binary STL of the latest code |
//! | GET | `/images/{id}/{render dir}/{file}` | stored PNG and index files |
//!
//! Errors are `{code, message, stage}`. Mutations of one session are
//! serialized; reads never wait for them.

use crate::pipeline::new_session_id;
use crate::session::{edit_stem, round_stem, EditTurn, Round, SessionState, Status};
use crate::{Pipeline, PipelineError, Stage, StageFailure};
use axum::extract::{Path, Query, State};
use axum::http::{header, StatusCode};
use axum::response::{IntoResponse, Response};
use axum::routing::{get, post};
use axum::{Json, Router};
use seekcad_clients::{Verdict, VerdictKind};
use seekcad_core::model::SsrModelDoc;
use seekcad_core::script::emit;
use seekcad_render::step_file_name;
use serde::{Deserialize, Serialize};
use std::collections::HashMap;
use std::sync::{Arc, RwLock};
use tower_http::services::ServeDir;

struct Handle {
    state: RwLock<SessionState>,
    mutate: Arc<tokio::sync::Mutex<()>>,
}

pub struct AppState {
    pipeline: Arc<Pipeline>,
    sessions: RwLock<HashMap<String, Arc<Handle>>>,
}

#[derive(Debug)]
pub struct ApiError {
    status: StatusCode,
    body: StageFailure,
}

impl ApiError {
    fn new(status: StatusCode, stage: Stage, code: &str, message: impl Into<String>) -> Self {
        ApiError {
            status,
            body: StageFailure { stage, code: code.into(), message: message.into() },
        }
    }

    fn from_pipeline(e: PipelineError, stage: Stage) -> Self {
        let status = match &e {
            PipelineError::NotFound(_) => StatusCode::NOT_FOUND,
            PipelineError::InvalidRequest(_) => StatusCode::BAD_REQUEST,
            PipelineError::NotReady(_) => StatusCode::CONFLICT,
            PipelineError::CompileFailed(_) | PipelineError::RenderFailed(_) => StatusCode::UNPROCESSABLE_ENTITY,
            PipelineError::Client(_) | PipelineError::Retrieval(_) => StatusCode::BAD_GATEWAY,
            PipelineError::Io(_) => StatusCode::INTERNAL_SERVER_ERROR,
        };
        ApiError { status, body: e.at(stage) }
    }
}

impl IntoResponse for ApiError {
    fn into_response(self) -> Response {
        (self.status, Json(self.body)).into_response()
    }
}

type ApiResult<T> = Result<T, ApiError>;

pub fn router(pipeline: Arc<Pipeline>) -> Router {
    let images = ServeDir::new(pipeline.store.root().to_path_buf());
    let state = Arc::new(AppState { pipeline, sessions: RwLock::new(HashMap::new()) });
    Router::new()
        .route("/api/sessions", post(create_session))
        .route("/api/sessions/{id}", get(get_session))
        .route("/api/sessions/{id}/steps", get(get_steps))
        .route("/api/sessions/{id}/edits", post(post_edit))
        .route("/api/sessions/{id}/mesh", get(get_mesh))
        .nest_service("/images", images)
        .with_state(state)
}

pub async fn serve(pipeline: Arc<Pipeline>, addr: std::net::SocketAddr) -> std::io::Result<()> {
    let listener = tokio::net::TcpListener::bind(addr).await?;
    log::info!("listening on http://{}", listener.local_addr()?);
    axum::serve(listener, router(pipeline)).await
}

fn handle(app: &AppState, id: &str) -> ApiResult<Arc<Handle>> {
    if let Some(h) = app.sessions.read().expect("session map lock").get(id) {
        return Ok(h.clone());
    }
    let st = app.pipeline.store.load(id).map_err(|e| ApiError::from_pipeline(e, Stage::Session))?;
    let mut map = app.sessions.write().expect("session map lock");
    Ok(map
        .entry(id.to_string())
        .or_insert_with(|| Arc::new(Handle { state: RwLock::new(st), mutate: Arc::default() }))
        .clone())
}

fn snapshot(h: &Handle) -> SessionState {
    h.state.read().expect("session lock").clone()
}

#[derive(Deserialize)]
struct CreateSession {
    query: String,
}

#[derive(Serialize, Deserialize)]
pub struct Created {
    pub session_id: String,
}

async fn create_session(State(app): State<Arc<AppState>>, Json(req): Json<CreateSession>) -> ApiResult<(StatusCode, Json<Created>)> {
    if req.query.trim().is_empty() {
        return Err(ApiError::new(StatusCode::BAD_REQUEST, Stage::Session, "InvalidRequest", "query is empty"));
    }
    let id = new_session_id();
    let h = Arc::new(Handle {
        state: RwLock::new(SessionState::new(&id, req.query.trim(), app.pipeline.config.max_refine)),
        mutate: Arc::default(),
    });
    app.sessions.write().expect("session map lock").insert(id.clone(), h.clone());
    let guard = h.mutate.clone().lock_owned().await;
    let pipeline = app.pipeline.clone();
    let run_id = id.clone();
    tokio::spawn(async move {
        let _guard = guard;
        let hh = h.clone();
        let outcome = tokio::task::spawn_blocking(move || {
            pipeline.run_session_with_id(&run_id, &req.query, &mut |s| *hh.state.write().expect("session lock") = s.clone())
        })
        .await;
        let failure = match outcome {
            Ok(Ok(_)) => None,
            Ok(Err(e)) => Some(e.at(Stage::Session)),
            Err(e) => Some(StageFailure { stage: Stage::Session, code: "Internal".into(), message: e.to_string() }),
        };
        if let Some(f) = failure {
            log::error!("session failed: {}", f.message);
            let mut st = h.state.write().expect("session lock");
            st.status = Status::Failed;
            st.failure = Some(f);
        }
    });
    Ok((StatusCode::ACCEPTED, Json(Created { session_id: id })))
}

fn image_url(id: &str, dir: &str, file: &str) -> String {
    format!("/images/{id}/{dir}/{file}")
}

#[derive(Debug, Serialize, Deserialize)]
pub struct RoundSummary {
    pub index: usize,
    pub compiled: bool,
    pub triplets: usize,
    pub verdict: Option<Verdict>,
    pub failure: Option<StageFailure>,
    pub final_image_url: Option<String>,
}

#[derive(Debug, Serialize, Deserialize)]
pub struct EditSummary {
    pub index: usize,
    pub instruction: String,
    pub triplets: usize,
    pub code: String,
    pub final_image_url: String,
}

#[derive(Debug, Serialize, Deserialize)]
pub struct SessionSummary {
    pub session_id: String,
    pub query: String,
    pub status: Status,
    pub degraded: bool,
    pub indicator: bool,
    pub max_refine: usize,
    pub refinements: usize,
    pub accepted_round: Option<usize>,
    pub rounds: Vec<RoundSummary>,
    pub edits: Vec<EditSummary>,
    pub failure: Option<StageFailure>,
    pub code: Option<String>,
    pub final_image_url: Option<String>,
    pub mesh_url: Option<String>,
}

fn edit_summary(id: &str, e: &EditTurn) -> EditSummary {
    EditSummary {
        index: e.index,
        instruction: e.instruction.clone(),
        triplets: e.triplets,
        code: e.result_code.clone(),
        final_image_url: image_url(id, &e.render_dir, "final.png"),
    }
}

pub fn summarize(st: &SessionState) -> SessionSummary {
    let id = &st.session_id;
    let round = |r: &Round| RoundSummary {
        index: r.index,
        compiled: r.compiled,
        triplets: r.triplets,
        verdict: r.verdict.clone(),
        failure: r.failure.clone(),
        final_image_url: r.render_dir.as_ref().map(|d| image_url(id, d, "final.png")),
    };
    let rounds: Vec<RoundSummary> = st.rounds.iter().map(round).collect();
    let edits: Vec<EditSummary> = st.edits.iter().map(|e| edit_summary(id, e)).collect();
    let final_image_url = match edits.last() {
        Some(e) => Some(e.final_image_url.clone()),
        None => st.accepted_round.and_then(|k| rounds[k].final_image_url.clone()),
    };
    let done = st.status == Status::Done;
    SessionSummary {
        session_id: id.clone(),
        query: st.query.clone(),
        status: st.status,
        degraded: st.degraded,
        indicator: st.indicator,
        max_refine: st.max_refine,
        refinements: st.refinements(),
        accepted_round: st.accepted_round,
        failure: st.failure.clone(),
        code: st.latest_code().map(str::to_string),
        mesh_url: (done && st.latest_code().is_some()).then(|| format!("/api/sessions/{id}/mesh")),
        final_image_url,
        rounds,
        edits,
    }
}

async fn get_session(State(app): State<Arc<AppState>>, Path(id): Path<String>) -> ApiResult<Json<SessionSummary>> {
    Ok(Json(summarize(&snapshot(&*handle(&app, &id)?))))
}

#[derive(Deserialize)]
struct StepQuery {
    round: Option<usize>,
    edit: Option<usize>,
}

#[derive(Debug, Serialize, Deserialize)]
pub struct StepView {
    /// `step` for one modeling step, `final` for the finished model.
    pub kind: String,
    pub triplet_index: Option<usize>,
    pub image_url: String,
    pub code_excerpt: String,
    pub cot_segment: Option<String>,
    pub verdict: Option<String>,
}

fn verdict_word(v: &Verdict) -> String {
    match v.kind {
        VerdictKind::Aligned => "YES",
        VerdictKind::Misaligned => "NO",
        VerdictKind::Unsure => "UNSURE",
    }
    .into()
}

fn triplet_excerpt(doc: &SsrModelDoc, t: usize) -> String {
    let one = SsrModelDoc {
        doc_id: doc.doc_id.clone(),
        description: None,
        triplets: vec![doc.triplets[t].clone()],
        ops: vec![],
    };
    emit(&one)
}

async fn get_steps(
    State(app): State<Arc<AppState>>,
    Path(id): Path<String>,
    Query(q): Query<StepQuery>,
) -> ApiResult<Json<Vec<StepView>>> {
    let st = snapshot(&*handle(&app, &id)?);
    let missing = |what: String| ApiError::new(StatusCode::NOT_FOUND, Stage::Render, "NotFound", what);
    let (stem, dir, code, cot, verdict) = match (q.round, q.edit) {
        (Some(_), Some(_)) => {
            return Err(ApiError::new(StatusCode::BAD_REQUEST, Stage::Session, "InvalidRequest", "give round or edit, not both"))
        }
        (None, Some(j)) => {
            let e = st.edits.get(j).ok_or_else(|| missing(format!("no edit {j}")))?;
            (edit_stem(j), e.render_dir.clone(), e.result_code.clone(), e.cot.clone(), None)
        }
        (round, None) => {
            let pick = match round {
                Some(k) => Some(k),
                None if !st.edits.is_empty() => {
                    let j = st.edits.len() - 1;
                    let e = &st.edits[j];
                    let (stem, dir, code, cot) = (edit_stem(j), e.render_dir.clone(), e.result_code.clone(), e.cot.clone());
                    return steps_view(&app, &st, &stem, &dir, &code, &cot, None).await.map(Json);
                }
                None => st.accepted_round.or_else(|| st.rounds.iter().rev().find(|r| r.render_dir.is_some()).map(|r| r.index)),
            };
            let k = pick.ok_or_else(|| missing("no rendered round yet".into()))?;
            let r = st.rounds.get(k).ok_or_else(|| missing(format!("no round {k}")))?;
            let dir = r.render_dir.clone().ok_or_else(|| missing(format!("round {k} was not rendered")))?;
            (round_stem(k), dir, r.code.clone(), r.cot.clone(), r.verdict.as_ref().map(verdict_word))
        }
    };
    steps_view(&app, &st, &stem, &dir, &code, &cot, verdict).await.map(Json)
}

async fn steps_view(
    app: &AppState,
    st: &SessionState,
    stem: &str,
    dir: &str,
    code: &str,
    cot: &[String],
    verdict: Option<String>,
) -> ApiResult<Vec<StepView>> {
    let doc = app
        .pipeline
        .store
        .read_doc(&st.session_id, stem)
        .map_err(|e| ApiError::from_pipeline(e, Stage::Session))?;
    let id = &st.session_id;
    let mut out: Vec<StepView> = (0..doc.triplets.len())
        .map(|t| StepView {
            kind: "step".into(),
            triplet_index: Some(t),
            image_url: image_url(id, dir, &step_file_name(t)),
            code_excerpt: triplet_excerpt(&doc, t),
            cot_segment: cot.get(t).cloned(),
            verdict: None,
        })
        .collect();
    out.push(StepView {
        kind: "final".into(),
        triplet_index: None,
        image_url: image_url(id, dir, "final.png"),
        code_excerpt: code.to_string(),
        cot_segment: None,
        verdict,
    });
    Ok(out)
}

#[derive(Deserialize)]
struct EditRequest {
    instruction: String,
}

async fn post_edit(
    State(app): State<Arc<AppState>>,
    Path(id): Path<String>,
    Json(req): Json<EditRequest>,
) -> ApiResult<(StatusCode, Json<EditSummary>)> {
    let h = handle(&app, &id)?;
    let _guard = h.mutate.clone().lock_owned().await;
    let pipeline = app.pipeline.clone();
    let run_id = id.clone();
    let turn = tokio::task::spawn_blocking(move || pipeline.edit_session(&run_id, &req.instruction))
        .await
        .map_err(|e| ApiError::new(StatusCode::INTERNAL_SERVER_ERROR, Stage::Edit, "Internal", e.to_string()))?
        .map_err(|e| ApiError::from_pipeline(e, Stage::Edit))?;
    let fresh = app.pipeline.store.load(&id).map_err(|e| ApiError::from_pipeline(e, Stage::Session))?;
    *h.state.write().expect("session lock") = fresh;
    Ok((StatusCode::CREATED, Json(edit_summary(&id, &turn))))
}

async fn get_mesh(State(app): State<Arc<AppState>>, Path(id): Path<String>) -> ApiResult<Response> {
    let st = snapshot(&*handle(&app, &id)?);
    if st.status != Status::Done {
        return Err(ApiError::from_pipeline(PipelineError::NotReady(st.status), Stage::Session));
    }
    let pipeline = app.pipeline.clone();
    let mesh = tokio::task::spawn_blocking(move || pipeline.session_mesh(&id))
        .await
        .map_err(|e| ApiError::new(StatusCode::INTERNAL_SERVER_ERROR, Stage::Compile, "Internal", e.to_string()))?
        .map_err(|e| ApiError::from_pipeline(e, Stage::Compile))?;
    Ok(([(header::CONTENT_TYPE, "model/stl")], mesh.to_stl_bytes()).into_response())
}
