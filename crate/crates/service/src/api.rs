use std::sync::Arc;

use axum::extract::{Path, State};
use axum::http::{header, HeaderMap, StatusCode};
use axum::response::{IntoResponse, Response};
use axum::routing::{get, post};
use axum::{Json, Router};
use serde::{Deserialize, Serialize};
use serde_json::json;
use vidcue_core::evidence::{PointPrompt, VideoAnnotation};

use crate::segment::{SegmentError, SegmentRequest, SegmentationClient};
use crate::store::{AnnotationEnvelope, Store, StoreError};

pub const REVISION_HEADER: &str = "expected-revision";
const REVISION_HEADER_ALT: &str = "expected_revision";

#[derive(Clone)]
pub struct AppState {
    pub store: Arc<Store>,
    pub segmenter: Arc<dyn SegmentationClient>,
}

pub fn router(state: AppState) -> Router {
    Router::new()
        .route("/videos", get(list_videos))
        .route("/videos/{id}", get(get_video))
        .route("/videos/{id}/frames/{n}", get(get_frame))
        .route("/videos/{id}/annotation", get(get_annotation).put(put_annotation))
        .route("/videos/{id}/segment", post(segment))
        .route("/export", post(export))
        .with_state(state)
}

pub struct ApiError(StatusCode, serde_json::Value);

impl ApiError {
    fn new(status: StatusCode, code: &str, message: impl Into<String>) -> Self {
        Self(status, json!({ "error": code, "message": message.into() }))
    }
}

impl IntoResponse for ApiError {
    fn into_response(self) -> Response {
        (self.0, Json(self.1)).into_response()
    }
}

impl From<StoreError> for ApiError {
    fn from(e: StoreError) -> Self {
        let msg = e.to_string();
        match e {
            StoreError::NotFound(_) => Self::new(StatusCode::NOT_FOUND, "not-found", msg),
            StoreError::BadId(_) => Self::new(StatusCode::BAD_REQUEST, "bad-id", msg),
            StoreError::Conflict { expected, current } => Self(
                StatusCode::CONFLICT,
                json!({ "error": "conflict", "message": msg, "expected_revision": expected, "current_revision": current }),
            ),
            StoreError::Invalid(violations) => Self(
                StatusCode::UNPROCESSABLE_ENTITY,
                json!({ "error": "invalid-annotation", "message": msg, "violations": violations }),
            ),
            StoreError::Mismatch(..) => Self::new(StatusCode::UNPROCESSABLE_ENTITY, "video-mismatch", msg),
            StoreError::ExportRefused(offenders) => Self(
                StatusCode::CONFLICT,
                json!({
                    "error": "export-refused",
                    "message": msg,
                    "offenders": offenders.iter().map(|(id, why)| json!({ "video_id": id, "reason": why })).collect::<Vec<_>>(),
                }),
            ),
            StoreError::Corrupt(..) => Self::new(StatusCode::INTERNAL_SERVER_ERROR, "corrupt-record", msg),
            StoreError::Import(_) => Self::new(StatusCode::BAD_REQUEST, "import-refused", msg),
            StoreError::Io(_) => {
                tracing::error!("store write failed: {msg}");
                Self::new(StatusCode::INTERNAL_SERVER_ERROR, "store-error", msg)
            }
        }
    }
}

impl From<SegmentError> for ApiError {
    fn from(e: SegmentError) -> Self {
        let msg = e.to_string();
        match e {
            SegmentError::Rejected(_) => Self::new(StatusCode::UNPROCESSABLE_ENTITY, "rejected", msg),
            SegmentError::Retryable(_) => Self::new(StatusCode::SERVICE_UNAVAILABLE, "retryable-error", msg),
            SegmentError::Failed(_) => Self::new(StatusCode::BAD_GATEWAY, "segmentation-failed", msg),
        }
    }
}

async fn list_videos(State(st): State<AppState>) -> Result<impl IntoResponse, ApiError> {
    Ok(Json(st.store.list()?))
}

async fn get_video(State(st): State<AppState>, Path(id): Path<String>) -> Result<impl IntoResponse, ApiError> {
    let env = st.store.get(&id)?;
    Ok(Json(json!({
        "info": env.info,
        "revision": env.revision,
        "updated_at": env.updated_at,
        "verdict": env.annotation.as_ref().map(|a| a.verdict),
    })))
}

async fn get_frame(State(st): State<AppState>, Path((id, n)): Path<(String, u32)>) -> Result<Response, ApiError> {
    let env = st.store.get(&id)?;
    if n >= env.info.frame_count {
        return Err(ApiError::new(
            StatusCode::NOT_FOUND,
            "not-found",
            format!("frame {n} beyond {} frames", env.info.frame_count),
        ));
    }
    let dir = st.store.frame_dir(&id);
    for (ext, mime) in [("png", "image/png"), ("jpg", "image/jpeg")] {
        if let Ok(bytes) = std::fs::read(dir.join(format!("{n:06}.{ext}"))) {
            return Ok(([(header::CONTENT_TYPE, mime)], bytes).into_response());
        }
    }
    Ok(([(header::CONTENT_TYPE, "image/svg+xml")], placeholder_svg(&id, n, env.info.width, env.info.height)).into_response())
}

pub fn placeholder_svg(id: &str, frame: u32, width: u32, height: u32) -> String {
    let label: String = id.chars().filter(|c| c.is_ascii_alphanumeric() || matches!(c, '-' | '_' | '.')).collect();
    format!(
        "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"{width}\" height=\"{height}\" viewBox=\"0 0 {width} {height}\">\
<rect width=\"100%\" height=\"100%\" fill=\"#333\"/>\
<text x=\"50%\" y=\"50%\" fill=\"#ccc\" font-family=\"monospace\" text-anchor=\"middle\">{label} frame {frame}</text></svg>"
    )
}

#[derive(Serialize)]
struct EnvelopeBody {
    video_id: String,
    revision: u64,
    updated_at: Option<String>,
    annotation: Option<VideoAnnotation>,
}

impl From<AnnotationEnvelope> for EnvelopeBody {
    fn from(env: AnnotationEnvelope) -> Self {
        Self { video_id: env.info.video_id, revision: env.revision, updated_at: env.updated_at, annotation: env.annotation }
    }
}

async fn get_annotation(State(st): State<AppState>, Path(id): Path<String>) -> Result<impl IntoResponse, ApiError> {
    Ok(Json(EnvelopeBody::from(st.store.get(&id)?)))
}

fn expected_revision(headers: &HeaderMap) -> Result<u64, ApiError> {
    let raw = headers
        .get(REVISION_HEADER)
        .or_else(|| headers.get(REVISION_HEADER_ALT))
        .ok_or_else(|| ApiError::new(StatusCode::PRECONDITION_REQUIRED, "missing-revision", format!("{REVISION_HEADER} header is required")))?;
    raw.to_str()
        .ok()
        .and_then(|s| s.trim().parse().ok())
        .ok_or_else(|| ApiError::new(StatusCode::BAD_REQUEST, "bad-revision", "revision must be a non-negative integer"))
}

async fn put_annotation(
    State(st): State<AppState>,
    Path(id): Path<String>,
    headers: HeaderMap,
    body: axum::body::Bytes,
) -> Result<impl IntoResponse, ApiError> {
    let expected = expected_revision(&headers)?;
    let annotation: VideoAnnotation = serde_json::from_slice(&body)
        .map_err(|e| ApiError::new(StatusCode::BAD_REQUEST, "bad-record", e.to_string()))?;
    let store = st.store.clone();
    let env = tokio::task::spawn_blocking(move || store.put(&id, annotation, expected))
        .await
        .map_err(|e| ApiError::new(StatusCode::INTERNAL_SERVER_ERROR, "internal", e.to_string()))??;
    Ok(Json(EnvelopeBody::from(env)))
}

#[derive(Debug, Deserialize)]
pub struct SegmentBody {
    pub frame: u32,
    pub points: Vec<PointPrompt>,
}

async fn segment(
    State(st): State<AppState>,
    Path(id): Path<String>,
    body: axum::body::Bytes,
) -> Result<impl IntoResponse, ApiError> {
    let body: SegmentBody = serde_json::from_slice(&body)
        .map_err(|e| ApiError::new(StatusCode::BAD_REQUEST, "bad-request", e.to_string()))?;
    let env = st.store.get(&id)?;
    if body.frame >= env.info.frame_count {
        return Err(SegmentError::Rejected(format!("frame {} beyond {} frames", body.frame, env.info.frame_count)).into());
    }
    if let Some(p) = body.points.iter().find(|p| p.frame >= env.info.frame_count) {
        return Err(SegmentError::Rejected(format!("point frame {} beyond {} frames", p.frame, env.info.frame_count)).into());
    }
    let req = SegmentRequest { video_id: id, frame: body.frame, width: env.info.width, height: env.info.height, points: body.points };
    req.check()?;
    Ok(Json(st.segmenter.segment(&req).await?))
}

async fn export(State(st): State<AppState>) -> Result<Response, ApiError> {
    let archive = st.store.export()?;
    Ok(([(header::CONTENT_TYPE, "application/json")], archive).into_response())
}
