//! HTTP session service.

use std::collections::HashMap;
use std::path::PathBuf;
use std::sync::{Arc, Mutex};
use std::time::{Duration, Instant};

use axum::extract::rejection::JsonRejection;
use axum::extract::{Path, State};
use axum::http::StatusCode;
use axum::response::{IntoResponse, Response};
use axum::routing::{get, post};
use axum::{Json, Router};
use serde::{Deserialize, Serialize};

use exosolve_core::eval::{load_scenario, Engine, Flags, LoadedScenario, Scenario, Visibility};
use exosolve_core::map::load_map;
use exosolve_core::query::QueryLevel;
use exosolve_core::session::{Session, SessionView};
use exosolve_core::Error;

use crate::commands::{CliError, CliResult};

struct Entry {
    session: Session,
    /// Set when the background decision failed.
    error: Option<String>,
}

struct Slot {
    entry: Arc<Mutex<Entry>>,
    touched: Instant,
}

struct AppState {
    engine: Engine,
    sessions: Mutex<HashMap<String, Slot>>,
    idle: Duration,
}

type Shared = Arc<AppState>;

#[derive(Debug, Deserialize)]
#[serde(untagged)]
enum ScenarioRef {
    Path(PathBuf),
    Inline(Box<Scenario>),
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct CreateSession {
    scenario: ScenarioRef,
    level: QueryLevel,
    #[serde(default)]
    flags: Flags,
    #[serde(default)]
    visibility: Option<Visibility>,
}

#[derive(Debug, Deserialize)]
struct AnswerBody {
    text: Option<String>,
}

#[derive(Serialize)]
struct ViewOut {
    #[serde(flatten)]
    view: SessionView,
    error: Option<String>,
}

struct ApiError(StatusCode, String);

impl From<Error> for ApiError {
    fn from(e: Error) -> Self {
        let status = match &e {
            Error::InvalidState(_) => StatusCode::CONFLICT,
            e if e.is_schema_error() => StatusCode::BAD_REQUEST,
            Error::Config(_) => StatusCode::BAD_REQUEST,
            _ => StatusCode::INTERNAL_SERVER_ERROR,
        };
        ApiError(status, e.to_string())
    }
}

impl IntoResponse for ApiError {
    fn into_response(self) -> Response {
        (self.0, Json(serde_json::json!({ "error": self.1 }))).into_response()
    }
}

impl From<JsonRejection> for ApiError {
    fn from(r: JsonRejection) -> Self {
        ApiError(r.status(), r.body_text())
    }
}

type ApiResult<T> = Result<T, ApiError>;

fn view(state: &AppState, e: &Entry) -> ViewOut {
    ViewOut {
        view: e.session.view(&state.engine),
        error: e.error.clone(),
    }
}

fn lookup(state: &AppState, id: &str) -> ApiResult<Arc<Mutex<Entry>>> {
    let mut map = state.sessions.lock().expect("session table poisoned");
    let slot = map
        .get_mut(id)
        .ok_or_else(|| ApiError(StatusCode::NOT_FOUND, format!("no session {id}")))?;
    slot.touched = Instant::now();
    Ok(slot.entry.clone())
}

async fn blocking<T: Send + 'static>(f: impl FnOnce() -> ApiResult<T> + Send + 'static) -> ApiResult<T> {
    tokio::task::spawn_blocking(f)
        .await
        .map_err(|e| ApiError(StatusCode::INTERNAL_SERVER_ERROR, e.to_string()))?
}

fn load(state: &AppState, r: ScenarioRef) -> Result<LoadedScenario, Error> {
    match r {
        ScenarioRef::Path(p) => load_scenario(p, &state.engine.lexicon),
        ScenarioRef::Inline(s) => {
            let map = match (&s.map, &s.map_ref) {
                (Some(m), _) => m.clone(),
                (None, Some(p)) => load_map(p)?,
                (None, None) => {
                    return Err(Error::Validation(format!(
                        "scenario {} has neither map nor map_ref",
                        s.id
                    )))
                }
            };
            LoadedScenario::new(*s, Arc::new(map), &state.engine.lexicon)
        }
    }
}

async fn healthz() -> Json<serde_json::Value> {
    Json(serde_json::json!({ "status": "ok" }))
}

async fn create(
    State(state): State<Shared>,
    body: Result<Json<CreateSession>, JsonRejection>,
) -> ApiResult<(StatusCode, Json<ViewOut>)> {
    let Json(body) = body?;
    let st = state.clone();
    let (id, entry, out) = blocking(move || {
        let scn = load(&st, body.scenario)?;
        let id = uuid::Uuid::new_v4().to_string();
        let session = Session::start(id.clone(), &st.engine, scn, body.level, body.flags, body.visibility)?;
        let entry = Entry { session, error: None };
        let out = view(&st, &entry);
        Ok((id, Arc::new(Mutex::new(entry)), out))
    })
    .await?;
    state.sessions.lock().expect("session table poisoned").insert(
        id.clone(),
        Slot {
            entry: entry.clone(),
            touched: Instant::now(),
        },
    );
    tracing::info!(session = %id, scenario = %out.view.scenario_id, "session created");
    // The resolver's first pass runs in the background; clients poll.
    let st = state.clone();
    tokio::task::spawn_blocking(move || {
        let mut e = entry.lock().expect("session poisoned");
        if let Err(err) = e.session.decide(&st.engine) {
            tracing::error!(session = %id, error = %err, "decision failed");
            e.error = Some(err.to_string());
        }
    });
    Ok((StatusCode::CREATED, Json(out)))
}

async fn fetch(State(state): State<Shared>, Path(id): Path<String>) -> ApiResult<Json<ViewOut>> {
    let entry = lookup(&state, &id)?;
    let out = blocking(move || Ok(view(&state, &entry.lock().expect("session poisoned")))).await?;
    Ok(Json(out))
}

async fn answer(
    State(state): State<Shared>,
    Path(id): Path<String>,
    body: Result<Json<AnswerBody>, JsonRejection>,
) -> ApiResult<Json<ViewOut>> {
    let Json(body) = body?;
    let entry = lookup(&state, &id)?;
    let out = blocking(move || {
        let mut e = entry.lock().expect("session poisoned");
        e.session.answer(&state.engine, body.text.as_deref())?;
        Ok(view(&state, &e))
    })
    .await?;
    tracing::info!(session = %id, final_id = ?out.view.final_id, "session answered");
    Ok(Json(out))
}

fn router(state: Shared) -> Router {
    Router::new()
        .route("/healthz", get(healthz))
        .route("/sessions", post(create))
        .route("/sessions/{id}", get(fetch))
        .route("/sessions/{id}/answer", post(answer))
        .with_state(state)
}

async fn expire(state: Shared) {
    let mut tick = tokio::time::interval(state.idle.min(Duration::from_secs(30)).max(Duration::from_millis(100)));
    loop {
        tick.tick().await;
        let mut map = state.sessions.lock().expect("session table poisoned");
        let before = map.len();
        map.retain(|_, s| s.touched.elapsed() < state.idle);
        if map.len() < before {
            tracing::info!(expired = before - map.len(), "idle sessions dropped");
        }
    }
}

pub fn serve(engine: Engine, addr: std::net::SocketAddr, idle: Duration) -> CliResult {
    let rt = tokio::runtime::Runtime::new().map_err(|e| CliError::runtime(e.to_string()))?;
    rt.block_on(async move {
        let listener = tokio::net::TcpListener::bind(addr)
            .await
            .map_err(|e| CliError::runtime(format!("binding {addr}: {e}")))?;
        let local = listener.local_addr().map_err(|e| CliError::runtime(e.to_string()))?;
        let state = Arc::new(AppState {
            engine,
            sessions: Mutex::new(HashMap::new()),
            idle,
        });
        tokio::spawn(expire(state.clone()));
        println!("{}", serde_json::json!({ "listening": local.to_string() }));
        tracing::info!(addr = %local, "serving");
        axum::serve(listener, router(state))
            .with_graceful_shutdown(async {
                let _ = tokio::signal::ctrl_c().await;
            })
            .await
            .map_err(|e| CliError::runtime(e.to_string()))
    })
}
