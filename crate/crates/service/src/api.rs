//! HTTP + WebSocket surface.

use std::sync::{Arc, Mutex};

use armsizer::analysis::GateThresholds;
use armsizer::model::RobotKind;
use armsizer::pipeline::{ArtifactKind, ScenarioConfig, ENGINE_NAME, ENGINE_VERSION};
use armsizer::sizing::{ActuatorCatalog, SizingConfig};
use armsizer::trajectory::Program;
use axum::body::Bytes;
use axum::extract::ws::{Message, WebSocket, WebSocketUpgrade};
use axum::extract::{Path, State};
use axum::http::{header, StatusCode};
use axum::response::{IntoResponse, Response};
use axum::routing::{get, post};
use axum::{Json, Router};
use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};
use serde_json::json;
use uuid::Uuid;

use crate::events::Subscriber;
use crate::runs::{self, RunRecord, RunStatus};
use crate::session::{JogCommand, Session, SessionError};
use crate::AppState;

#[derive(Debug)]
pub enum ApiError {
    NotFound(String),
    Invalid(String),
    Conflict(String),
    Internal(String),
}

impl IntoResponse for ApiError {
    fn into_response(self) -> Response {
        let (code, msg) = match self {
            ApiError::NotFound(m) => (StatusCode::NOT_FOUND, m),
            ApiError::Invalid(m) => (StatusCode::UNPROCESSABLE_ENTITY, m),
            ApiError::Conflict(m) => (StatusCode::CONFLICT, m),
            ApiError::Internal(m) => (StatusCode::INTERNAL_SERVER_ERROR, m),
        };
        (code, Json(json!({ "error": msg }))).into_response()
    }
}

impl From<SessionError> for ApiError {
    fn from(e: SessionError) -> Self {
        ApiError::Invalid(e.to_string())
    }
}

type ApiResult<T> = Result<T, ApiError>;

/// JSON body that may also be omitted entirely.
fn optional_body<T: DeserializeOwned + Default>(body: &Bytes) -> ApiResult<T> {
    if body.iter().all(u8::is_ascii_whitespace) {
        return Ok(T::default());
    }
    serde_json::from_slice(body).map_err(|e| ApiError::Invalid(format!("request body: {e}")))
}

fn required_body<T: DeserializeOwned>(body: &Bytes) -> ApiResult<T> {
    serde_json::from_slice(body).map_err(|e| ApiError::Invalid(format!("request body: {e}")))
}

pub fn router(state: Arc<AppState>) -> Router {
    Router::new()
        .route("/health", get(health))
        .route("/sessions", post(create_session))
        .route("/sessions/{id}/state", get(get_state).put(put_state))
        .route("/sessions/{id}/jog", post(jog))
        .route("/sessions/{id}/program", get(get_program).put(put_program))
        .route("/sessions/{id}/scenario", get(get_scenario).put(put_scenario))
        .route("/sessions/{id}/results", get(get_results))
        .route("/sessions/{id}/runs", post(submit_run))
        .route("/sessions/{id}/events", get(events))
        .route("/runs/{id}", get(get_run))
        .route("/runs/{id}/artifacts/{kind}", get(get_artifact))
        .with_state(state)
}

fn session(state: &AppState, id: &str) -> ApiResult<Arc<Session>> {
    Uuid::parse_str(id)
        .ok()
        .and_then(|id| state.sessions.read().unwrap().get(&id).cloned())
        .ok_or_else(|| ApiError::NotFound(format!("unknown session {id}")))
}

fn run(state: &AppState, id: &str) -> ApiResult<Arc<Mutex<RunRecord>>> {
    Uuid::parse_str(id)
        .ok()
        .and_then(|id| state.runs.read().unwrap().get(&id).cloned())
        .ok_or_else(|| ApiError::NotFound(format!("unknown run {id}")))
}

async fn health() -> Json<serde_json::Value> {
    Json(json!({ "engine": ENGINE_NAME, "version": ENGINE_VERSION }))
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(default)]
pub struct CreateSession {
    pub robot: RobotKind,
    pub scenario: ScenarioConfig,
}

impl Default for CreateSession {
    fn default() -> Self {
        Self { robot: RobotKind::Cr4, scenario: ScenarioConfig::default() }
    }
}

async fn create_session(State(state): State<Arc<AppState>>, body: Bytes) -> ApiResult<impl IntoResponse> {
    let req: CreateSession = optional_body(&body)?;
    let robot = req.robot;
    let session = tokio::task::spawn_blocking(move || Session::new(robot, req.scenario))
        .await
        .map_err(|e| ApiError::Internal(e.to_string()))??;
    let snapshot = session.snapshot();
    let id = session.id;
    state.sessions.write().unwrap().insert(id, Arc::new(session));
    Ok((StatusCode::CREATED, Json(json!({ "session_id": id, "state": snapshot }))))
}

async fn get_state(State(state): State<Arc<AppState>>, Path(id): Path<String>) -> ApiResult<impl IntoResponse> {
    Ok(Json(session(&state, &id)?.snapshot()))
}

#[derive(Debug, Deserialize)]
struct SetConfiguration {
    q: Vec<f64>,
}

async fn put_state(State(state): State<Arc<AppState>>, Path(id): Path<String>, body: Bytes) -> ApiResult<impl IntoResponse> {
    let s = session(&state, &id)?;
    let req: SetConfiguration = required_body(&body)?;
    Ok(Json(s.set_configuration(&req.q)?))
}

async fn jog(State(state): State<Arc<AppState>>, Path(id): Path<String>, body: Bytes) -> ApiResult<impl IntoResponse> {
    let s = session(&state, &id)?;
    let cmd: JogCommand = required_body(&body)?;
    Ok(Json(s.jog(&cmd).await?))
}

async fn get_program(State(state): State<Arc<AppState>>, Path(id): Path<String>) -> ApiResult<impl IntoResponse> {
    Ok(Json(session(&state, &id)?.program()))
}

async fn put_program(State(state): State<Arc<AppState>>, Path(id): Path<String>, body: Bytes) -> ApiResult<impl IntoResponse> {
    let s = session(&state, &id)?;
    let program: Program = required_body(&body)?;
    let generation = s.set_program(program)?;
    Ok(Json(json!({ "generation": generation })))
}

async fn get_scenario(State(state): State<Arc<AppState>>, Path(id): Path<String>) -> ApiResult<impl IntoResponse> {
    let (robot, scenario) = session(&state, &id)?.scenario();
    Ok(Json(json!({ "robot": robot, "scenario": scenario })))
}

async fn put_scenario(State(state): State<Arc<AppState>>, Path(id): Path<String>, body: Bytes) -> ApiResult<impl IntoResponse> {
    let s = session(&state, &id)?;
    let scenario: ScenarioConfig = required_body(&body)?;
    Ok(Json(s.set_scenario(scenario)?))
}

async fn get_results(State(state): State<Arc<AppState>>, Path(id): Path<String>) -> ApiResult<impl IntoResponse> {
    Ok(Json(session(&state, &id)?.results()))
}

/// Optional overrides for a run; the program and scenario always come from
/// the session.
#[derive(Debug, Default, Serialize, Deserialize)]
#[serde(default)]
pub struct RunRequest {
    pub catalog: Option<ActuatorCatalog>,
    pub sizing: Option<SizingConfig>,
    pub gate: Option<GateThresholds>,
}

async fn submit_run(State(state): State<Arc<AppState>>, Path(id): Path<String>, body: Bytes) -> ApiResult<impl IntoResponse> {
    let s = session(&state, &id)?;
    let req: RunRequest = optional_body(&body)?;
    let catalog = req.catalog.unwrap_or_else(|| state.catalog.clone());
    let (inputs, generation) = s.run_inputs(catalog, req.sizing.unwrap_or_default(), req.gate.unwrap_or_default());
    inputs.validate_program().map_err(|e| ApiError::Invalid(e.to_string()))?;
    inputs.sizing.validate().map_err(|e| ApiError::Invalid(e.to_string()))?;
    inputs.catalog.validate().map_err(|e| ApiError::Invalid(e.to_string()))?;

    let record = runs::new_record(&s, generation, &state.data_dir);
    let run_id = record.id;
    let shared = Arc::new(Mutex::new(record));
    state.runs.write().unwrap().insert(run_id, shared.clone());
    s.hub.publish(crate::events::EventKind::RunQueued, json!({ "run_id": run_id, "generation": generation }));
    tokio::spawn(runs::execute(s, shared, inputs));
    Ok((StatusCode::ACCEPTED, Json(json!({ "run_id": run_id, "status": RunStatus::Queued }))))
}

async fn get_run(State(state): State<Arc<AppState>>, Path(id): Path<String>) -> ApiResult<impl IntoResponse> {
    let r = run(&state, &id)?;
    let record = r.lock().unwrap().clone();
    Ok(Json(record))
}

async fn get_artifact(
    State(state): State<Arc<AppState>>,
    Path((id, kind)): Path<(String, String)>,
) -> ApiResult<impl IntoResponse> {
    let r = run(&state, &id)?;
    let kind = ArtifactKind::parse(&kind).ok_or_else(|| ApiError::NotFound(format!("unknown artifact kind {kind}")))?;
    let (status, dir) = {
        let rec = r.lock().unwrap();
        (rec.status, rec.dir.clone())
    };
    if !status.finished() {
        return Err(ApiError::Conflict(format!("run {id} has not finished")));
    }
    let bytes = tokio::fs::read(dir.join(kind.file_name()))
        .await
        .map_err(|_| ApiError::NotFound(format!("run {id} has no {} artifact", kind.file_name())))?;
    Ok(([(header::CONTENT_TYPE, kind.content_type())], bytes))
}

async fn events(
    State(state): State<Arc<AppState>>,
    Path(id): Path<String>,
    ws: WebSocketUpgrade,
) -> ApiResult<impl IntoResponse> {
    let s = session(&state, &id)?;
    // Subscribe before the handshake completes so nothing published after
    // the client sees the upgrade is missed.
    let sub = s.hub.subscribe();
    Ok(ws.on_upgrade(move |socket| pump(socket, s, sub)))
}

/// Forward events to the client. A text frame `resync` asks for a fresh
/// state event.
async fn pump(mut socket: WebSocket, session: Arc<Session>, sub: Subscriber) {
    loop {
        tokio::select! {
            event = sub.recv() => {
                let text = serde_json::to_string(&event).expect("event serializes");
                if socket.send(Message::Text(text.into())).await.is_err() {
                    break;
                }
            }
            incoming = socket.recv() => match incoming {
                Some(Ok(Message::Text(t))) if t.trim() == "resync" => session.resync(),
                Some(Ok(Message::Close(_))) | None | Some(Err(_)) => break,
                Some(Ok(_)) => {}
            },
        }
    }
}
