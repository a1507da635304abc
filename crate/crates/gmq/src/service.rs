//! HTTP posing service: one loaded model, one editable pose, and a render
//! endpoint. Renders work on a snapshot of the state, so concurrent edits
//! never change an in-flight response.

use std::net::SocketAddr;
use std::sync::{Arc, RwLock};

use axum::body::Bytes;
use axum::extract::State;
use axum::http::{Method, StatusCode};
use axum::response::{IntoResponse, Response};
use axum::routing::{get, post, put};
use axum::{Json, Router};
use base64::engine::general_purpose::STANDARD as BASE64;
use base64::Engine;
use gmq_core::raster::DEFAULT_TAU;
use gmq_core::{Camera, CanonicalGaussian};
use serde::{Deserialize, Serialize};
use serde_json::json;
use tower_http::cors::{Any, CorsLayer};

use crate::error::{GmqError, Result};
use crate::model_io::{parse_json, ImageRecord, ModelFile, TransformRecord};
use crate::render::{posed_gaussians, render};

pub const MAX_RESOLUTION: usize = 512;
pub const SESSION_ID: &str = "session";

/// Immutable snapshot of the session.
#[derive(Clone, Debug)]
pub struct Session {
    pub model: ModelFile,
    pub canonical: Vec<CanonicalGaussian>,
    pub camera: Camera,
    pub transforms: Vec<TransformRecord>,
    pub yaw: f64,
    pub revision: u64,
}

impl Session {
    /// Starts from the model's `session` image (or its first image) when
    /// present, otherwise from identity transforms at yaw 0.
    pub fn new(model: ModelFile) -> Result<Self> {
        model.validate()?;
        let start = model.images.iter().find(|i| i.id == SESSION_ID).or(model.images.first());
        let (transforms, yaw) = match start {
            Some(img) => (img.transforms.clone(), img.yaw_rad),
            None => (vec![TransformRecord::identity(); model.k], 0.0),
        };
        Ok(Self {
            canonical: model.canonical_gaussians(),
            camera: model.camera()?,
            revision: model.revision.unwrap_or(0),
            model,
            transforms,
            yaw,
        })
    }

    /// The session in model-file form.
    pub fn to_model(&self) -> ModelFile {
        ModelFile {
            images: vec![ImageRecord {
                id: SESSION_ID.to_string(),
                yaw_rad: self.yaw,
                transforms: self.transforms.clone(),
                gaussians: None,
            }],
            revision: Some(self.revision),
            ..self.model.clone()
        }
    }
}

#[derive(Clone)]
pub struct AppState {
    session: Arc<RwLock<Arc<Session>>>,
}

impl AppState {
    pub fn new(session: Session) -> Self {
        Self { session: Arc::new(RwLock::new(Arc::new(session))) }
    }

    pub fn snapshot(&self) -> Arc<Session> {
        self.session.read().expect("session lock").clone()
    }
}

struct ApiError {
    status: StatusCode,
    message: String,
    field: Option<String>,
}

impl ApiError {
    fn unprocessable(field: impl Into<String>, message: impl Into<String>) -> Self {
        Self { status: StatusCode::UNPROCESSABLE_ENTITY, message: message.into(), field: Some(field.into()) }
    }

    fn from_gmq(e: GmqError) -> Self {
        match e {
            GmqError::Parse { field, message, .. } => Self::unprocessable(field, message),
            GmqError::Core(gmq_core::Error::InvariantViolation { field, reason }) => Self::unprocessable(field, reason),
            other => Self { status: StatusCode::UNPROCESSABLE_ENTITY, message: other.to_string(), field: None },
        }
    }
}

impl IntoResponse for ApiError {
    fn into_response(self) -> Response {
        (self.status, Json(json!({ "error": self.message, "field": self.field }))).into_response()
    }
}

fn parse_body<T: for<'de> Deserialize<'de>>(body: &Bytes) -> std::result::Result<T, ApiError> {
    let text = std::str::from_utf8(body).map_err(|_| ApiError::unprocessable("", "body is not UTF-8"))?;
    parse_json(text, "body").map_err(ApiError::from_gmq)
}

fn check_transforms(transforms: &[TransformRecord], k: usize) -> std::result::Result<(), ApiError> {
    if transforms.len() != k {
        return Err(ApiError::unprocessable("transforms", format!("expected {k} entries, got {}", transforms.len())));
    }
    for (i, tf) in transforms.iter().enumerate() {
        tf.with_yaw(0.0).validate_local(&format!("transforms[{i}]")).map_err(|e| ApiError::from_gmq(e.into()))?;
    }
    Ok(())
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct TransformsUpdate {
    transforms: Vec<TransformRecord>,
    yaw: f64,
    revision: u64,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Deserialize, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum RenderMode {
    Sum,
    Silhouette,
    #[serde(rename = "per-k")]
    PerK,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct RenderRequest {
    yaw: Option<f64>,
    transforms: Option<Vec<TransformRecord>>,
    resolution: usize,
    mode: RenderMode,
    tau: Option<f64>,
}

#[derive(Serialize)]
struct EllipseRecord {
    k: usize,
    valid: bool,
    mu_px: Option<[f64; 2]>,
    cov_px: Option<[[f64; 2]; 2]>,
}

#[derive(Serialize)]
struct RenderResponse {
    width: usize,
    height: usize,
    mode: RenderMode,
    /// Base64 PNG; in `per-k` mode the K maps side by side.
    png: String,
    ellipses: Vec<EllipseRecord>,
}

async fn health() -> Json<serde_json::Value> {
    Json(json!({ "status": "ok" }))
}

async fn get_model(State(state): State<AppState>) -> Json<ModelFile> {
    Json(state.snapshot().to_model())
}

async fn put_transforms(State(state): State<AppState>, body: Bytes) -> Response {
    let update: TransformsUpdate = match parse_body(&body) {
        Ok(u) => u,
        Err(e) => return e.into_response(),
    };
    let mut guard = state.session.write().expect("session lock");
    let current = guard.clone();
    if update.revision != current.revision {
        return ApiError {
            status: StatusCode::CONFLICT,
            message: format!("stale revision {} (current {})", update.revision, current.revision),
            field: Some("revision".into()),
        }
        .into_response();
    }
    if let Err(e) = check_transforms(&update.transforms, current.model.k) {
        return e.into_response();
    }
    if let Err(e) = gmq_core::transform::validate_yaw(update.yaw, "yaw") {
        return ApiError::from_gmq(e.into()).into_response();
    }
    let next = Session { transforms: update.transforms, yaw: update.yaw, revision: current.revision + 1, ..(*current).clone() };
    let revision = next.revision;
    *guard = Arc::new(next);
    (StatusCode::OK, Json(json!({ "revision": revision }))).into_response()
}

fn render_snapshot(session: &Session, req: &RenderRequest) -> std::result::Result<RenderResponse, ApiError> {
    if req.resolution == 0 || req.resolution > MAX_RESOLUTION {
        return Err(ApiError::unprocessable("resolution", format!("must lie in 1..={MAX_RESOLUTION}")));
    }
    let tau = req.tau.unwrap_or(DEFAULT_TAU);
    if !(tau > 0.0 && tau < 1.0) {
        return Err(ApiError::unprocessable("tau", "must lie in (0, 1)"));
    }
    let yaw = req.yaw.unwrap_or(session.yaw);
    if !yaw.is_finite() {
        return Err(ApiError::unprocessable("yaw", "must be finite"));
    }
    let transforms = req.transforms.as_deref().unwrap_or(&session.transforms);
    check_transforms(transforms, session.model.k)?;
    let camera = session.camera.resized(req.resolution, req.resolution);
    let rendered = render(&posed_gaussians(&session.canonical, Some(transforms), yaw), &camera);
    let png = match req.mode {
        RenderMode::Sum => rendered.sum_png(),
        RenderMode::Silhouette => rendered.silhouette_png(tau),
        RenderMode::PerK => rendered.strip_png(),
    };
    let ellipses = rendered
        .projections
        .iter()
        .enumerate()
        .map(|(k, p)| EllipseRecord { k, valid: p.is_some(), mu_px: p.map(|g| g.mu_px.0), cov_px: p.map(|g| g.cov_px.0) })
        .collect();
    Ok(RenderResponse { width: camera.width, height: camera.height, mode: req.mode, png: BASE64.encode(png), ellipses })
}

async fn post_render(State(state): State<AppState>, body: Bytes) -> Response {
    let req: RenderRequest = match parse_body(&body) {
        Ok(r) => r,
        Err(e) => return e.into_response(),
    };
    let snapshot = state.snapshot();
    let result = tokio::task::spawn_blocking(move || render_snapshot(&snapshot, &req)).await;
    match result {
        Ok(Ok(resp)) => Json(resp).into_response(),
        Ok(Err(e)) => e.into_response(),
        Err(e) => (StatusCode::INTERNAL_SERVER_ERROR, Json(json!({ "error": e.to_string() }))).into_response(),
    }
}

pub fn router(state: AppState) -> Router {
    let cors = CorsLayer::new()
        .allow_origin(Any)
        .allow_methods([Method::GET, Method::PUT, Method::POST])
        .allow_headers(Any);
    Router::new()
        .route("/health", get(health))
        .route("/model", get(get_model))
        .route("/model/transforms", put(put_transforms))
        .route("/render", post(post_render))
        .layer(cors)
        .with_state(state)
}

/// Serves `model` until the process is interrupted.
pub async fn serve(model: ModelFile, addr: SocketAddr) -> Result<()> {
    let app = router(AppState::new(Session::new(model)?));
    let listener = tokio::net::TcpListener::bind(addr).await.map_err(|e| GmqError::io(addr.to_string(), e))?;
    eprintln!("listening on http://{}", listener.local_addr().map_err(|e| GmqError::io(addr.to_string(), e))?);
    axum::serve(listener, app)
        .with_graceful_shutdown(async {
            let _ = tokio::signal::ctrl_c().await;
        })
        .await
        .map_err(|e| GmqError::io(addr.to_string(), e))
}
