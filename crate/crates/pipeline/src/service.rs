//! HTTP API.
//!
//! | method | path | body |
//! |---|---|---|
//! | GET  | `/healthz` | |
//! | POST | `/v1/sessions` | optional `{"mode": "v1"\|"v2"}` |
//! | POST | `/v1/sessions/{id}/wake` | `{"utterance": "..."}` |
//! | POST | `/v1/sessions/{id}/query` | `{"text", "scene_ref" \| "scene", "gaze_px", "point_px"?, "mode"?}` |
//! | GET  | `/v1/sessions/{id}/history` | |
//! | GET  | `/v1/turns/{turn_id}/trace` | |
//!
//! A query on an idle session wakes it first. Errors are
//! `{"error": {"code", "message"}}`.

use std::collections::{HashMap, VecDeque};
use std::net::SocketAddr;
use std::path::PathBuf;
use std::sync::Arc;

use axum::body::Bytes;
use axum::extract::{Path, State};
use axum::http::StatusCode;
use axum::response::{IntoResponse, Response};
use axum::routing::{get, post};
use axum::{Json, Router};
use deixis_core::history::Exchange;
use deixis_core::resolver::{GeneratorMode, ResolverConfig};
use deixis_core::scene::{PixelPoint, SceneFixture};
use serde::{Deserialize, Serialize};
use serde_json::json;
use tokio::sync::{Mutex, RwLock};
use uuid::Uuid;

use crate::pipeline::Backends;
use crate::session::{Phase, SceneSource, Session, TurnRequest, TurnResult, TurnTrace};

/// Traces kept for `/v1/turns/{id}/trace`, oldest evicted first.
pub const TRACE_CAPACITY: usize = 1024;

#[derive(Clone)]
pub struct ServiceConfig {
    pub backends: Backends,
    pub resolver: ResolverConfig,
    pub mode: GeneratorMode,
    /// Directory `scene_ref` names are looked up in.
    pub fixtures_dir: Option<PathBuf>,
}

#[derive(Default)]
struct TraceStore {
    order: VecDeque<Uuid>,
    by_id: HashMap<Uuid, TurnTrace>,
}

impl TraceStore {
    fn insert(&mut self, trace: TurnTrace) {
        if self.order.len() == TRACE_CAPACITY {
            if let Some(old) = self.order.pop_front() {
                self.by_id.remove(&old);
            }
        }
        self.order.push_back(trace.turn_id);
        self.by_id.insert(trace.turn_id, trace);
    }
}

pub struct AppState {
    config: ServiceConfig,
    sessions: RwLock<HashMap<Uuid, Arc<Mutex<Session>>>>,
    traces: Mutex<TraceStore>,
}

impl AppState {
    pub fn new(config: ServiceConfig) -> Arc<Self> {
        Arc::new(Self {
            config,
            sessions: RwLock::new(HashMap::new()),
            traces: Mutex::new(TraceStore::default()),
        })
    }

    async fn session(&self, id: &str) -> Result<Arc<Mutex<Session>>, ApiError> {
        let id = Uuid::parse_str(id).map_err(|_| ApiError::not_found("session", id))?;
        self.sessions
            .read()
            .await
            .get(&id)
            .cloned()
            .ok_or_else(|| ApiError::not_found("session", &id.to_string()))
    }
}

#[derive(Debug)]
pub struct ApiError {
    status: StatusCode,
    code: &'static str,
    message: String,
}

impl ApiError {
    fn bad_request(message: impl Into<String>) -> Self {
        Self {
            status: StatusCode::BAD_REQUEST,
            code: "bad_request",
            message: message.into(),
        }
    }

    fn not_found(what: &str, id: &str) -> Self {
        Self {
            status: StatusCode::NOT_FOUND,
            code: "not_found",
            message: format!("no {what} {id}"),
        }
    }
}

impl IntoResponse for ApiError {
    fn into_response(self) -> Response {
        let body = json!({"error": {"code": self.code, "message": self.message}});
        (self.status, Json(body)).into_response()
    }
}

fn parse_body<T: for<'de> Deserialize<'de>>(body: &Bytes) -> Result<T, ApiError> {
    serde_json::from_slice(body).map_err(|e| ApiError::bad_request(format!("invalid body: {e}")))
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct CreateSession {
    mode: Option<GeneratorMode>,
}

#[derive(Debug, Serialize)]
struct SessionCreated {
    session_id: Uuid,
    mode: GeneratorMode,
    phase: Phase,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct WakeBody {
    utterance: String,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct QueryBody {
    pub text: String,
    #[serde(default)]
    pub scene_ref: Option<String>,
    #[serde(default)]
    pub scene: Option<SceneFixture>,
    pub gaze_px: PixelPoint,
    #[serde(default)]
    pub point_px: Option<PixelPoint>,
    #[serde(default)]
    pub mode: Option<GeneratorMode>,
}

#[derive(Debug, Serialize)]
struct HistoryBody {
    session_id: Uuid,
    history: Vec<Exchange>,
}

pub fn router(state: Arc<AppState>) -> Router {
    Router::new()
        .route("/healthz", get(healthz))
        .route("/v1/sessions", post(create_session))
        .route("/v1/sessions/{id}/wake", post(wake))
        .route("/v1/sessions/{id}/query", post(query))
        .route("/v1/sessions/{id}/history", get(history))
        .route("/v1/turns/{turn_id}/trace", get(trace))
        .with_state(state)
}

pub async fn serve(addr: SocketAddr, config: ServiceConfig) -> std::io::Result<()> {
    let listener = tokio::net::TcpListener::bind(addr).await?;
    tracing::info!(addr = %listener.local_addr()?, "listening");
    axum::serve(listener, router(AppState::new(config))).await
}

async fn healthz() -> Json<serde_json::Value> {
    Json(json!({"status": "ok"}))
}

async fn create_session(
    State(state): State<Arc<AppState>>,
    body: Bytes,
) -> Result<(StatusCode, Json<SessionCreated>), ApiError> {
    let req: CreateSession = if body.iter().all(u8::is_ascii_whitespace) {
        CreateSession::default()
    } else {
        parse_body(&body)?
    };
    let mode = req.mode.unwrap_or(state.config.mode);
    let session = Session::new(state.config.resolver, mode);
    let created = SessionCreated {
        session_id: session.id(),
        mode,
        phase: session.phase(),
    };
    state
        .sessions
        .write()
        .await
        .insert(session.id(), Arc::new(Mutex::new(session)));
    Ok((StatusCode::CREATED, Json(created)))
}

async fn wake(
    State(state): State<Arc<AppState>>,
    Path(id): Path<String>,
    body: Bytes,
) -> Result<Json<serde_json::Value>, ApiError> {
    let req: WakeBody = parse_body(&body)?;
    let session = state.session(&id).await?;
    let mut s = session.lock().await;
    let reply = s.wake(&req.utterance);
    Ok(Json(json!({"phase": s.phase(), "reply": reply})))
}

/// Accept `mango`, `mango.json` and nothing that could leave the directory.
fn fixture_path(dir: &std::path::Path, name: &str) -> Result<PathBuf, ApiError> {
    let ok = !name.is_empty()
        && !name.starts_with('.')
        && name
            .chars()
            .all(|c| c.is_ascii_alphanumeric() || "-_.".contains(c));
    if !ok {
        return Err(ApiError::bad_request(format!("invalid scene_ref {name:?}")));
    }
    let file = if name.ends_with(".json") {
        name.to_string()
    } else {
        format!("{name}.json")
    };
    Ok(dir.join(file))
}

async fn load_scene(state: &AppState, body: &QueryBody) -> Result<Arc<SceneFixture>, ApiError> {
    match (&body.scene_ref, &body.scene) {
        (Some(_), Some(_)) => Err(ApiError::bad_request("give scene_ref or scene, not both")),
        (None, None) => Err(ApiError::bad_request("scene_ref or scene is required")),
        (None, Some(scene)) => {
            scene
                .validate()
                .map_err(|e| ApiError::bad_request(format!("invalid scene: {e}")))?;
            Ok(Arc::new(scene.clone()))
        }
        (Some(name), None) => {
            let dir = state
                .config
                .fixtures_dir
                .as_deref()
                .ok_or_else(|| ApiError::bad_request("service has no fixtures directory"))?;
            let path = fixture_path(dir, name)?;
            if !path.is_file() {
                return Err(ApiError::not_found("fixture", name));
            }
            SceneFixture::load(&path)
                .map(Arc::new)
                .map_err(|e| ApiError::bad_request(format!("fixture {name}: {e}")))
        }
    }
}

async fn query(
    State(state): State<Arc<AppState>>,
    Path(id): Path<String>,
    body: Bytes,
) -> Result<Json<TurnResult>, ApiError> {
    let req: QueryBody = parse_body(&body)?;
    let session = state.session(&id).await?;
    let fixture = load_scene(&state, &req).await?;

    let mut s = session.lock().await;
    if s.phase() == Phase::Idle {
        s.wake("hey glass");
    }
    let result = s
        .run_turn(
            &state.config.backends,
            TurnRequest {
                query: req.text,
                scene: SceneSource::Fixture(fixture),
                gaze_px: req.gaze_px,
                point_px: req.point_px,
                mode: req.mode,
            },
        )
        .await
        .map_err(|e| ApiError {
            status: StatusCode::CONFLICT,
            code: "invalid_phase",
            message: e.to_string(),
        })?;
    drop(s);
    state.traces.lock().await.insert(result.trace.clone());
    Ok(Json(result))
}

async fn history(
    State(state): State<Arc<AppState>>,
    Path(id): Path<String>,
) -> Result<Json<HistoryBody>, ApiError> {
    let session = state.session(&id).await?;
    let s = session.lock().await;
    Ok(Json(HistoryBody {
        session_id: s.id(),
        history: s.exchanges(),
    }))
}

async fn trace(
    State(state): State<Arc<AppState>>,
    Path(turn_id): Path<String>,
) -> Result<Json<TurnTrace>, ApiError> {
    let id = Uuid::parse_str(&turn_id).map_err(|_| ApiError::not_found("turn", &turn_id))?;
    state
        .traces
        .lock()
        .await
        .by_id
        .get(&id)
        .cloned()
        .map(Json)
        .ok_or_else(|| ApiError::not_found("turn", &turn_id))
}
