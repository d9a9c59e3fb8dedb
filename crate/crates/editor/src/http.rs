//! JSON over HTTP plus a server-sent event stream per session.

use std::collections::BTreeMap;
use std::convert::Infallible;
use std::path::PathBuf;
use std::sync::atomic::{AtomicU64, Ordering};
use std::sync::{Arc, Mutex, RwLock};

use axum::body::Bytes;
use axum::extract::{Path, Query, State};
use axum::http::{header, StatusCode};
use axum::response::sse::{Event, KeepAlive, Sse};
use axum::response::{IntoResponse, Response};
use axum::routing::{get, post};
use axum::{Json, Router};
use serde::{Deserialize, Serialize};
use serde_json::{json, Value};
use tokio::sync::broadcast;
use tokio_stream::wrappers::BroadcastStream;
use tokio_stream::{Stream, StreamExt};

use blocking_core::camera::ServoSteps;
use blocking_core::pipeline::{read_world, StoryWorld};

use crate::session::{Cursor, Edit, EditEvent, EditorError, Session, StateDetail, StateDocument};

const EVENT_BUFFER: usize = 64;

struct Slot {
    session: Mutex<Session>,
    events: broadcast::Sender<EditEvent>,
}

/// Worlds are loaded once per directory and shared by the sessions opened on
/// them; each session is edited under its own lock.
pub struct AppState {
    default_world: Option<PathBuf>,
    worlds: Mutex<BTreeMap<PathBuf, Arc<StoryWorld>>>,
    sessions: RwLock<BTreeMap<String, Arc<Slot>>>,
    next_id: AtomicU64,
}

impl AppState {
    /// Sessions that name no world open on `default_world`.
    pub fn new(default_world: Option<PathBuf>) -> Self {
        Self {
            default_world,
            worlds: Mutex::new(BTreeMap::new()),
            sessions: RwLock::new(BTreeMap::new()),
            next_id: AtomicU64::new(1),
        }
    }

    /// A state whose default world is already in memory.
    pub fn with_world(dir: PathBuf, world: StoryWorld) -> Self {
        let s = Self::new(Some(dir.clone()));
        s.worlds.lock().expect("world cache").insert(dir, Arc::new(world));
        s
    }

    fn world(&self, requested: Option<&str>) -> Result<Arc<StoryWorld>, EditorError> {
        let dir = match (requested, &self.default_world) {
            (Some(p), _) => PathBuf::from(p),
            (None, Some(d)) => d.clone(),
            (None, None) => return Err(EditorError::World("no world given and none served".into())),
        };
        let mut cache = self.worlds.lock().expect("world cache");
        if let Some(w) = cache.get(&dir) {
            return Ok(w.clone());
        }
        let w = Arc::new(read_world(&dir).map_err(|e| EditorError::World(e.to_string()))?);
        cache.insert(dir, w.clone());
        Ok(w)
    }

    fn slot(&self, id: &str) -> Result<Arc<Slot>, EditorError> {
        let sessions = self.sessions.read().expect("session table");
        sessions.get(id).cloned().ok_or_else(|| EditorError::UnknownSession(id.to_string()))
    }
}

struct ApiError {
    status: StatusCode,
    code: &'static str,
    message: String,
    details: Value,
}

impl ApiError {
    fn bad_request(message: impl Into<String>) -> Self {
        Self { status: StatusCode::BAD_REQUEST, code: "bad_request", message: message.into(), details: Value::Null }
    }
}

impl From<EditorError> for ApiError {
    fn from(e: EditorError) -> Self {
        let (status, details) = match &e {
            EditorError::UnknownSession(id) => (StatusCode::NOT_FOUND, json!({"session_id": id})),
            EditorError::UnknownTarget(id) => (StatusCode::NOT_FOUND, json!({"target": id})),
            EditorError::StaleVersion { expected, current } => {
                (StatusCode::CONFLICT, json!({"expected": expected, "current": current}))
            }
            EditorError::InvalidEdit(_) => (StatusCode::UNPROCESSABLE_ENTITY, Value::Null),
            EditorError::World(_) => (StatusCode::BAD_REQUEST, Value::Null),
        };
        Self { status, code: e.code(), message: e.to_string(), details }
    }
}

impl IntoResponse for ApiError {
    fn into_response(self) -> Response {
        let body = json!({"code": self.code, "message": self.message, "details": self.details});
        (self.status, Json(body)).into_response()
    }
}

fn parse<T: for<'de> Deserialize<'de>>(body: &Bytes) -> Result<T, ApiError> {
    serde_json::from_slice(body).map_err(|e| ApiError::bad_request(format!("malformed body: {e}")))
}

#[derive(Deserialize)]
struct OpenRequest {
    #[serde(default)]
    world: Option<String>,
    scene_id: u32,
    shot_id: u32,
    #[serde(default)]
    steps: Option<ServoSteps>,
}

#[derive(Serialize)]
struct Opened {
    session_id: String,
    cursor: Cursor,
    version: u64,
}

#[derive(Deserialize)]
struct EditRequest {
    expected_version: u64,
    #[serde(flatten)]
    edit: Edit,
}

async fn open_session(State(app): State<Arc<AppState>>, body: Bytes) -> Result<Response, ApiError> {
    let req: OpenRequest = parse(&body)?;
    let world = app.world(req.world.as_deref())?;
    let id = format!("s{}", app.next_id.fetch_add(1, Ordering::Relaxed));
    let cursor = Cursor { scene_id: req.scene_id, shot_id: req.shot_id };
    let session = Session::open(id.clone(), &world, cursor, req.steps)?;
    let (events, _) = broadcast::channel(EVENT_BUFFER);
    app.sessions.write().expect("session table").insert(id.clone(), Arc::new(Slot { session: Mutex::new(session), events }));
    Ok((StatusCode::CREATED, Json(Opened { session_id: id, cursor, version: 0 })).into_response())
}

async fn post_edit(
    State(app): State<Arc<AppState>>,
    Path(id): Path<String>,
    body: Bytes,
) -> Result<Response, ApiError> {
    let slot = app.slot(&id)?;
    let req: EditRequest = parse(&body)?;
    let mut session = slot.session.lock().expect("session lock");
    let result = session.apply_edit(req.expected_version, req.edit)?;
    if result.accepted {
        // sent under the lock so subscribers see versions in order
        let _ = slot.events.send(EditEvent { version: result.version, changed_ids: result.changed_ids.clone() });
    }
    Ok(Json(result).into_response())
}

async fn get_state(
    State(app): State<Arc<AppState>>,
    Path(id): Path<String>,
    Query(q): Query<BTreeMap<String, String>>,
) -> Result<Response, ApiError> {
    let slot = app.slot(&id)?;
    let detail = match q.get("detail") {
        None => StateDetail::Summary,
        Some(d) => serde_json::from_value(Value::String(d.clone()))
            .map_err(|_| ApiError::bad_request(format!("unknown detail `{d}` (summary, snapshot or topdown_svg)")))?,
    };
    let doc = slot.session.lock().expect("session lock").state(detail);
    Ok(match doc {
        StateDocument::Summary(s) => Json(s).into_response(),
        StateDocument::Snapshot(s) => Json(s).into_response(),
        StateDocument::TopdownSvg(svg) => ([(header::CONTENT_TYPE, "image/svg+xml")], svg).into_response(),
    })
}

async fn events(
    State(app): State<Arc<AppState>>,
    Path(id): Path<String>,
) -> Result<Sse<impl Stream<Item = Result<Event, Infallible>>>, ApiError> {
    let rx = app.slot(&id)?.events.subscribe();
    let stream = BroadcastStream::new(rx).filter_map(|m| m.ok()).map(|e| {
        let data = serde_json::to_string(&e).expect("event serializes");
        Ok(Event::default().event("edit").data(data))
    });
    Ok(Sse::new(stream).keep_alive(KeepAlive::default()))
}

pub fn router(state: Arc<AppState>) -> Router {
    Router::new()
        .route("/sessions", post(open_session))
        .route("/sessions/{id}/edits", post(post_edit))
        .route("/sessions/{id}/state", get(get_state))
        .route("/sessions/{id}/events", get(events))
        .with_state(state)
}

pub async fn serve(listener: tokio::net::TcpListener, state: Arc<AppState>) -> std::io::Result<()> {
    axum::serve(listener, router(state)).await
}
