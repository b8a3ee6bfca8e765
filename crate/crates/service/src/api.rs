//! HTTP routes.
//!
//! | method | path | body | response |
//! |---|---|---|---|
//! | PUT | `/assets` | WAV bytes | `{id, duration, channels, sample_rate}` |
//! | GET | `/assets/{id}` | | WAV bytes |
//! | PUT | `/soundscapes` | soundscape JSON | `{id, report, warnings}` |
//! | GET | `/soundscapes/{id}?embed=true` | | soundscape JSON |
//! | POST | `/render` | `{soundscape, trajectory, depth}` | WAV bytes |
//! | GET | `/session/{id}` | WebSocket upgrade | see [`crate::session`] |
//!
//! Failures answer with `{code, message, path}` where `path` is a JSON
//! pointer into the request body, or empty.

use std::path::PathBuf;
use std::sync::Arc;

use axum::body::Bytes;
use axum::extract::{DefaultBodyLimit, Path, Query, State};
use axum::http::{header, StatusCode};
use axum::response::{IntoResponse, Response};
use axum::routing::{get, post, put};
use axum::{Json, Router};
use serde::Deserialize;
use serde_json::{json, Value};
use soundscape::audio::{encode_wav, BitDepth};
use soundscape::binaural::{spherical_head_set, DistanceModel, HrirError, HrirSet};
use soundscape::engine::{load_assets, EngineOptions};
use soundscape::model::{self, embed_assets, Soundscape};
use soundscape::trajectory::{render_offline, Trajectory};
use tower_http::cors::CorsLayer;

use crate::remote::{fetch_url, is_url};
use crate::session;
use crate::storage::{Storage, StorageError};

/// Longest offline render accepted, in seconds.
pub const MAX_RENDER_SECS: f64 = 600.0;
/// Request body limit.
pub const MAX_BODY_BYTES: usize = 512 * 1024 * 1024;

#[derive(Debug, Clone)]
pub struct ServiceConfig {
    pub data_dir: PathBuf,
    /// HRIR directory; the built-in spherical-head set when absent.
    pub hrir_dir: Option<PathBuf>,
    /// Session streaming speed relative to real time.
    pub pace: f64,
}

impl ServiceConfig {
    pub fn new(data_dir: impl Into<PathBuf>) -> Self {
        Self {
            data_dir: data_dir.into(),
            hrir_dir: None,
            pace: 1.0,
        }
    }
}

#[derive(Debug, thiserror::Error)]
pub enum StartError {
    #[error(transparent)]
    Storage(#[from] StorageError),
    #[error("cannot load HRIR set: {0}")]
    Hrir(#[from] HrirError),
    #[error("pace must be positive and finite, got {0}")]
    Pace(f64),
}

pub struct Shared {
    pub storage: Storage,
    pub hrirs: Arc<HrirSet>,
    pub model: DistanceModel,
    pub pace: f64,
}

#[derive(Clone)]
pub struct AppState(pub Arc<Shared>);

impl AppState {
    pub fn new(config: &ServiceConfig) -> Result<Self, StartError> {
        if !(config.pace > 0.0 && config.pace.is_finite()) {
            return Err(StartError::Pace(config.pace));
        }
        let hrirs = match &config.hrir_dir {
            Some(dir) => HrirSet::load_dir(dir)?,
            None => spherical_head_set(48_000),
        };
        Ok(Self(Arc::new(Shared {
            storage: Storage::open(&config.data_dir)?,
            hrirs: Arc::new(hrirs),
            model: DistanceModel::default(),
            pace: config.pace,
        })))
    }
}

#[derive(Debug)]
pub struct ApiError {
    pub status: StatusCode,
    pub body: Value,
}

impl ApiError {
    pub fn new(status: StatusCode, code: &str, message: impl Into<String>) -> Self {
        Self {
            status,
            body: json!({"code": code, "message": message.into(), "path": ""}),
        }
    }

    pub fn at(mut self, path: impl Into<String>) -> Self {
        self.body["path"] = Value::String(path.into());
        self
    }

    pub fn with(mut self, key: &str, value: Value) -> Self {
        self.body[key] = value;
        self
    }

    fn not_found(what: &str, id: &str) -> Self {
        Self::new(StatusCode::NOT_FOUND, "not_found", format!("no {what} with id {id:?}"))
    }

    fn internal(message: impl std::fmt::Display) -> Self {
        tracing::error!("{message}");
        Self::new(StatusCode::INTERNAL_SERVER_ERROR, "internal", message.to_string())
    }
}

impl From<StorageError> for ApiError {
    fn from(e: StorageError) -> Self {
        match e {
            StorageError::Wav(w) => Self::new(StatusCode::BAD_REQUEST, "unsupported_audio", w.to_string()),
            other => Self::internal(other),
        }
    }
}

impl IntoResponse for ApiError {
    fn into_response(self) -> Response {
        (self.status, Json(self.body)).into_response()
    }
}

type ApiResult<T> = Result<T, ApiError>;

async fn blocking<T: Send + 'static>(f: impl FnOnce() -> T + Send + 'static) -> ApiResult<T> {
    tokio::task::spawn_blocking(f).await.map_err(ApiError::internal)
}

pub fn router(state: AppState) -> Router {
    Router::new()
        .route("/assets", put(put_asset))
        .route("/assets/{id}", get(get_asset))
        .route("/soundscapes", put(put_soundscape))
        .route("/soundscapes/{id}", get(get_soundscape))
        .route("/render", post(render))
        .route("/session/{id}", get(session::upgrade))
        .layer(DefaultBodyLimit::max(MAX_BODY_BYTES))
        .layer(CorsLayer::permissive())
        .with_state(state)
}

/// Serves until the listener fails.
pub async fn serve(listener: tokio::net::TcpListener, state: AppState) -> std::io::Result<()> {
    axum::serve(listener, router(state)).await
}

/// Fetches the bytes behind an asset URI: a stored asset or an HTTP(S) URL.
pub fn resolve_asset(storage: &Storage, uri: &str) -> Result<Vec<u8>, String> {
    if let Some(id) = storage.asset_id_for_uri(uri) {
        return storage
            .asset(&id)
            .map_err(|e| e.to_string())?
            .ok_or_else(|| format!("asset {id} is missing from storage"));
    }
    if is_url(uri) {
        return fetch_url(uri);
    }
    Err(format!("{uri:?} is neither a stored asset nor an http(s) URL"))
}

/// Loads and parses a stored soundscape.
pub fn load_soundscape(storage: &Storage, id: &str) -> ApiResult<Soundscape> {
    let doc = storage.soundscape(id)?.ok_or_else(|| ApiError::not_found("soundscape", id))?;
    let parsed = model::deserialize(&doc).map_err(ApiError::internal)?;
    Ok(parsed.soundscape)
}

async fn put_asset(State(state): State<AppState>, body: Bytes) -> ApiResult<Json<Value>> {
    let record = blocking(move || state.0.storage.put_asset(&body)).await??;
    Ok(Json(json!({
        "id": record.id,
        "duration": record.duration,
        "channels": record.channels,
        "sample_rate": record.sample_rate,
    })))
}

async fn get_asset(State(state): State<AppState>, Path(id): Path<String>) -> ApiResult<Response> {
    let lookup = id.clone();
    let bytes = blocking(move || state.0.storage.asset(&lookup))
        .await??
        .ok_or_else(|| ApiError::not_found("asset", &id))?;
    Ok(([(header::CONTENT_TYPE, "audio/wav")], bytes).into_response())
}

async fn put_soundscape(State(state): State<AppState>, body: Bytes) -> ApiResult<Json<Value>> {
    let text = std::str::from_utf8(&body)
        .map_err(|e| ApiError::new(StatusCode::BAD_REQUEST, "invalid_document", format!("body is not UTF-8: {e}")))?;
    let parsed = model::deserialize(text)
        .map_err(|e| ApiError::new(StatusCode::BAD_REQUEST, "invalid_document", e.message).at(e.path))?;
    let report = model::validate(&parsed.soundscape);
    let report_json = serde_json::to_value(&report).map_err(ApiError::internal)?;
    if let Some(first) = report.errors().next() {
        let n = report.errors().count();
        return Err(ApiError::new(
            StatusCode::UNPROCESSABLE_ENTITY,
            "validation_failed",
            format!("soundscape has {n} error(s); first: {}", first.message),
        )
        .at(first.path.clone())
        .with("report", report_json));
    }
    let canonical = model::serialize(&parsed.soundscape).map_err(ApiError::internal)?;
    let title = parsed.soundscape.title.clone();
    let record = blocking(move || state.0.storage.put_soundscape(&canonical, &title)).await??;
    Ok(Json(json!({
        "id": record.id,
        "report": report_json,
        "warnings": parsed.warnings,
    })))
}

#[derive(Deserialize)]
struct EmbedQuery {
    #[serde(default)]
    embed: bool,
}

async fn get_soundscape(
    State(state): State<AppState>,
    Path(id): Path<String>,
    Query(q): Query<EmbedQuery>,
) -> ApiResult<Response> {
    let doc = blocking(move || -> ApiResult<String> {
        let storage = &state.0.storage;
        if !q.embed {
            return storage.soundscape(&id)?.ok_or_else(|| ApiError::not_found("soundscape", &id));
        }
        let scape = load_soundscape(storage, &id)?;
        let embedded = embed_assets(&scape, |uri| resolve_asset(storage, uri))
            .map_err(|e| ApiError::new(StatusCode::UNPROCESSABLE_ENTITY, "asset_unavailable", e.to_string()))?;
        model::serialize(&embedded).map_err(ApiError::internal)
    })
    .await??;
    Ok(([(header::CONTENT_TYPE, "application/json")], doc).into_response())
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct RenderRequest {
    soundscape: String,
    trajectory: Value,
    #[serde(default)]
    depth: BitDepth,
}

async fn render(State(state): State<AppState>, body: Bytes) -> ApiResult<Response> {
    let req: RenderRequest = serde_json::from_slice(&body)
        .map_err(|e| ApiError::new(StatusCode::BAD_REQUEST, "invalid_request", e.to_string()))?;
    let traj: Trajectory = serde_json::from_value(req.trajectory)
        .map_err(|e| ApiError::new(StatusCode::BAD_REQUEST, "invalid_trajectory", e.to_string()).at("/trajectory"))?;
    traj.check()
        .map_err(|e| ApiError::new(StatusCode::BAD_REQUEST, "invalid_trajectory", e.to_string()).at("/trajectory"))?;
    if traj.duration > MAX_RENDER_SECS {
        return Err(ApiError::new(
            StatusCode::PAYLOAD_TOO_LARGE,
            "render_too_long",
            format!("duration {} s exceeds the {MAX_RENDER_SECS} s limit", traj.duration),
        )
        .at("/trajectory/duration"));
    }
    let wav = blocking(move || -> ApiResult<Vec<u8>> {
        let shared = &state.0;
        let scape = load_soundscape(&shared.storage, &req.soundscape)?;
        let assets = load_assets(&scape, |uri| resolve_asset(&shared.storage, uri))
            .map_err(|e| ApiError::new(StatusCode::UNPROCESSABLE_ENTITY, "asset_unavailable", e.to_string()))?;
        let out = render_offline(
            &scape,
            &traj,
            &assets,
            Arc::clone(&shared.hrirs),
            shared.model,
            EngineOptions::default(),
        )
        .map_err(|e| ApiError::new(StatusCode::UNPROCESSABLE_ENTITY, "render_failed", e.to_string()))?;
        Ok(encode_wav(&out, req.depth))
    })
    .await??;
    Ok(([(header::CONTENT_TYPE, "audio/wav")], wav).into_response())
}
