//! HTTP session service.
//!
//! Routes:
//! - `GET /health`
//! - `POST /sessions` with `{"mesh_obj": "...", "config": {...}}`
//! - `GET /sessions/{id}`: bundle header JSON
//! - `GET /sessions/{id}/bundle`: bundle file bytes
//! - `POST /sessions/{id}/recompute` with exactly one of `gamma`, `r`, `k`
//! - `POST /sessions/{id}/extract` with `{"params": {...}}`: OBJ text
//!
//! Recompute and extract accept an optional `version`; a mismatch with the
//! current bundle is rejected with 409.

use std::collections::HashMap;
use std::sync::atomic::{AtomicU64, Ordering};
use std::sync::{Arc, RwLock};

use axum::extract::rejection::JsonRejection;
use axum::extract::{Path, State};
use axum::http::{header, HeaderMap, HeaderValue, StatusCode};
use axum::response::{IntoResponse, Response};
use axum::routing::{get, post};
use axum::{Json, Router};
use diffstruct::mesh::parse_obj;
use diffstruct::stripes::StripeParams;
use serde::Deserialize;
use serde_json::json;

use crate::bundle::SessionBundle;
use crate::config::SessionConfig;
use crate::error::{PipelineError, Stage};
use crate::session;

/// One session: the current bundle plus a lock that serializes recomputes.
pub struct Session {
    bundle: RwLock<Arc<SessionBundle>>,
    compute: tokio::sync::Mutex<()>,
}

impl Session {
    fn new(bundle: SessionBundle) -> Self {
        Self { bundle: RwLock::new(Arc::new(bundle)), compute: tokio::sync::Mutex::new(()) }
    }

    /// Current bundle; readers keep it even if a recompute replaces it.
    pub fn snapshot(&self) -> Arc<SessionBundle> {
        Arc::clone(&self.bundle.read().expect("bundle lock"))
    }
}

#[derive(Default)]
pub struct AppState {
    sessions: RwLock<HashMap<String, Arc<Session>>>,
    next_id: AtomicU64,
}

impl AppState {
    pub fn session(&self, id: &str) -> Option<Arc<Session>> {
        self.sessions.read().expect("session table").get(id).cloned()
    }

    fn insert(&self, bundle: SessionBundle) -> String {
        let id = format!("s{}", self.next_id.fetch_add(1, Ordering::Relaxed) + 1);
        self.sessions.write().expect("session table").insert(id.clone(), Arc::new(Session::new(bundle)));
        id
    }
}

#[derive(Debug)]
pub enum ApiError {
    NotFound(String),
    BadRequest(String),
    Conflict { current: u64, requested: u64 },
    Pipeline(PipelineError),
}

impl From<PipelineError> for ApiError {
    fn from(e: PipelineError) -> Self {
        ApiError::Pipeline(e)
    }
}

impl From<JsonRejection> for ApiError {
    fn from(e: JsonRejection) -> Self {
        ApiError::BadRequest(e.body_text())
    }
}

impl IntoResponse for ApiError {
    fn into_response(self) -> Response {
        let (status, body) = match self {
            ApiError::NotFound(id) => (StatusCode::NOT_FOUND, json!({ "error": format!("unknown session {id}") })),
            ApiError::BadRequest(msg) => (StatusCode::BAD_REQUEST, json!({ "error": msg })),
            ApiError::Conflict { current, requested } => (
                StatusCode::CONFLICT,
                json!({ "error": format!("stale version {requested}, current is {current}"), "current_version": current }),
            ),
            ApiError::Pipeline(e) => {
                let status =
                    if e.is_client_error() { StatusCode::BAD_REQUEST } else { StatusCode::INTERNAL_SERVER_ERROR };
                (status, json!({ "error": e.message, "stage": e.stage }))
            }
        };
        (status, Json(body)).into_response()
    }
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CreateRequest {
    pub mesh_obj: String,
    #[serde(default)]
    pub config: Option<serde_json::Value>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RecomputeRequest {
    pub gamma: Option<f64>,
    pub r: Option<f64>,
    pub k: Option<usize>,
    pub version: Option<u64>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExtractRequest {
    pub params: StripeParams,
    pub version: Option<u64>,
    pub max_depth: Option<u32>,
}

pub fn router() -> Router {
    router_with_state(Arc::new(AppState::default()))
}

pub fn router_with_state(state: Arc<AppState>) -> Router {
    Router::new()
        .route("/health", get(health))
        .route("/sessions", post(create))
        .route("/sessions/{id}", get(summary))
        .route("/sessions/{id}/bundle", get(bundle_bytes))
        .route("/sessions/{id}/recompute", post(recompute))
        .route("/sessions/{id}/extract", post(extract))
        .with_state(state)
}

async fn blocking<T: Send + 'static>(
    f: impl FnOnce() -> Result<T, PipelineError> + Send + 'static,
) -> Result<T, ApiError> {
    tokio::task::spawn_blocking(f)
        .await
        .map_err(|e| ApiError::Pipeline(PipelineError::new(Stage::Bundle, format!("worker failed: {e}"))))?
        .map_err(ApiError::from)
}

fn lookup(state: &AppState, id: &str) -> Result<Arc<Session>, ApiError> {
    state.session(id).ok_or_else(|| ApiError::NotFound(id.to_string()))
}

fn check_version(bundle: &SessionBundle, requested: Option<u64>) -> Result<(), ApiError> {
    match requested {
        Some(v) if v != bundle.session_version => {
            Err(ApiError::Conflict { current: bundle.session_version, requested: v })
        }
        _ => Ok(()),
    }
}

async fn health() -> Json<serde_json::Value> {
    Json(json!({ "status": "ok" }))
}

async fn create(
    State(state): State<Arc<AppState>>,
    body: Result<Json<CreateRequest>, JsonRejection>,
) -> Result<(StatusCode, Json<serde_json::Value>), ApiError> {
    let Json(req) = body?;
    let mut config: SessionConfig = match req.config {
        Some(v) => serde_json::from_value(v).map_err(|e| ApiError::BadRequest(format!("config: {e}")))?,
        None => SessionConfig::default(),
    };
    config.mesh = None;
    let mesh = parse_obj(&req.mesh_obj).map_err(|e| ApiError::BadRequest(format!("mesh: {e}")))?;
    config.validate().map_err(|e| ApiError::BadRequest(e.to_string()))?;
    config.check_selections(&mesh).map_err(|e| ApiError::BadRequest(e.to_string()))?;
    let bundle = blocking(move || session::precompute(&config, &mesh)).await?;
    let header = bundle.header();
    let id = state.insert(bundle);
    Ok((StatusCode::CREATED, Json(json!({ "id": id, "bundle": header }))))
}

async fn summary(
    State(state): State<Arc<AppState>>,
    Path(id): Path<String>,
) -> Result<Json<serde_json::Value>, ApiError> {
    let bundle = lookup(&state, &id)?.snapshot();
    Ok(Json(json!({ "id": id, "bundle": bundle.header() })))
}

async fn bundle_bytes(State(state): State<Arc<AppState>>, Path(id): Path<String>) -> Result<Response, ApiError> {
    let bundle = lookup(&state, &id)?.snapshot();
    let bytes = tokio::task::spawn_blocking(move || bundle.to_bytes())
        .await
        .map_err(|e| ApiError::Pipeline(PipelineError::new(Stage::Bundle, e)))?;
    Ok(([(header::CONTENT_TYPE, "application/octet-stream")], bytes).into_response())
}

async fn recompute(
    State(state): State<Arc<AppState>>,
    Path(id): Path<String>,
    body: Result<Json<RecomputeRequest>, JsonRejection>,
) -> Result<Json<serde_json::Value>, ApiError> {
    let Json(req) = body?;
    let session = lookup(&state, &id)?;
    let given = [req.gamma.is_some(), req.r.is_some(), req.k.is_some()].iter().filter(|&&b| b).count();
    if given != 1 {
        return Err(ApiError::BadRequest("give exactly one of gamma, r, k".into()));
    }
    // queue behind any running recompute of this session
    let _guard = session.compute.lock().await;
    let current = session.snapshot();
    check_version(&current, req.version)?;
    let next = blocking(move || match (req.gamma, req.r, req.k) {
        (Some(g), _, _) => session::recompute_gamma(&current, g),
        (_, Some(r), _) => session::recompute_r(&current, r),
        (_, _, Some(k)) => session::recompute_k(&current, k),
        _ => unreachable!("checked above"),
    })
    .await?;
    let header = next.header();
    *session.bundle.write().expect("bundle lock") = Arc::new(next);
    Ok(Json(json!({ "id": id, "bundle": header })))
}

async fn extract(
    State(state): State<Arc<AppState>>,
    Path(id): Path<String>,
    body: Result<Json<ExtractRequest>, JsonRejection>,
) -> Result<Response, ApiError> {
    let Json(req) = body?;
    req.params.validate().map_err(|e| ApiError::BadRequest(format!("params: {e}")))?;
    let bundle = lookup(&state, &id)?.snapshot();
    check_version(&bundle, req.version)?;
    let k = bundle.k();
    if !(1..=k).contains(&req.params.a) || !(1..=k).contains(&req.params.b) {
        return Err(ApiError::BadRequest(format!(
            "mode indices a={}, b={} must lie in 1..={k}",
            req.params.a, req.params.b
        )));
    }
    let (text, faces, version) = blocking(move || {
        let out = session::extract_structure(&bundle, req.params, req.max_depth)?;
        Ok((session::obj_text(&bundle, &out), out.face_count(), bundle.session_version))
    })
    .await?;
    let mut headers = HeaderMap::new();
    headers.insert(header::CONTENT_TYPE, HeaderValue::from_static("model/obj"));
    headers.insert("x-bundle-version", HeaderValue::from(version));
    headers.insert("x-face-count", HeaderValue::from(faces as u64));
    Ok((headers, text).into_response())
}

/// Binds `0.0.0.0:port` and serves until the process ends.
pub async fn serve(port: u16) -> std::io::Result<()> {
    let listener = tokio::net::TcpListener::bind(("0.0.0.0", port)).await?;
    log::info!("listening on {}", listener.local_addr()?);
    axum::serve(listener, router()).await
}
