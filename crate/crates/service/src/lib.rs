//! HTTP guard endpoint: screen prompts with a trained detector before an
//! application forwards them to an LLM.
//!
//! Routes: `POST /v1/classify` with `{"text": "..."}` and `GET /healthz`.
//! Responses carry exactly `label`, `score`, `model_kind` and
//! `schema_version`; the label and 4-decimal score always equal what
//! `promptguard predict` prints for the same model and text.

use std::sync::Arc;

use axum::extract::{DefaultBodyLimit, State};
use axum::http::StatusCode;
use axum::response::{IntoResponse, Response};
use axum::routing::{get, post};
use axum::Router;
use serde::Serialize;
use tokio::sync::Semaphore;

use promptguard_core::guard::{round4, Detector, GuardError};

/// Request body cap; prompts are short and this bounds abuse.
pub const MAX_BODY_BYTES: usize = 32 * 1024;
/// In-flight request bound; overflow is answered with 429.
pub const QUEUE_BOUND: usize = 64;

pub struct AppState {
    detector: Option<Detector>,
    queue: Semaphore,
}

impl AppState {
    pub fn ready(detector: Detector) -> Arc<Self> {
        Arc::new(Self {
            detector: Some(detector),
            queue: Semaphore::new(QUEUE_BOUND),
        })
    }

    /// A state with no model yet; health reports 503 until one is loaded.
    pub fn loading() -> Arc<Self> {
        Arc::new(Self {
            detector: None,
            queue: Semaphore::new(QUEUE_BOUND),
        })
    }

    /// Override the in-flight bound; used to exercise the overflow path.
    pub fn ready_with_queue(detector: Detector, bound: usize) -> Arc<Self> {
        Arc::new(Self {
            detector: Some(detector),
            queue: Semaphore::new(bound),
        })
    }
}

pub fn router(state: Arc<AppState>) -> Router {
    Router::new()
        .route("/v1/classify", post(classify))
        .route("/healthz", get(healthz))
        .layer(DefaultBodyLimit::max(MAX_BODY_BYTES))
        .with_state(state)
}

#[derive(Serialize)]
struct ClassifyResponse {
    label: &'static str,
    score: f64,
    model_kind: &'static str,
    schema_version: u32,
}

fn error_body(status: StatusCode, message: &str) -> Response {
    (
        status,
        axum::Json(serde_json::json!({ "error": message })),
    )
        .into_response()
}

async fn healthz(State(state): State<Arc<AppState>>) -> Response {
    match &state.detector {
        Some(detector) => (
            StatusCode::OK,
            axum::Json(serde_json::json!({
                "status": "ok",
                "model_kind": detector.model().model_kind.as_str(),
            })),
        )
            .into_response(),
        None => (
            StatusCode::SERVICE_UNAVAILABLE,
            axum::Json(serde_json::json!({ "status": "loading" })),
        )
            .into_response(),
    }
}

async fn classify(State(state): State<Arc<AppState>>, body: axum::body::Bytes) -> Response {
    let Some(detector) = &state.detector else {
        return error_body(StatusCode::SERVICE_UNAVAILABLE, "model not loaded");
    };
    let Ok(_permit) = state.queue.try_acquire() else {
        return error_body(StatusCode::TOO_MANY_REQUESTS, "request queue is full");
    };

    let parsed: serde_json::Value = match serde_json::from_slice(&body) {
        Ok(value) => value,
        Err(_) => return error_body(StatusCode::BAD_REQUEST, "body is not valid JSON"),
    };
    let Some(text) = parsed.get("text").and_then(|t| t.as_str()) else {
        return error_body(StatusCode::BAD_REQUEST, "missing \"text\" field");
    };

    match detector.classify(text) {
        Ok(result) => {
            let response = ClassifyResponse {
                label: if result.label == 1 {
                    "malicious"
                } else {
                    "legitimate"
                },
                score: round4(result.score),
                model_kind: detector.model().model_kind.as_str(),
                schema_version: detector.model().schema_version,
            };
            (StatusCode::OK, axum::Json(response)).into_response()
        }
        Err(GuardError::EmptyText) => error_body(StatusCode::BAD_REQUEST, "text is empty"),
        Err(err) => error_body(
            StatusCode::INTERNAL_SERVER_ERROR,
            &format!("classification failed: {err}"),
        ),
    }
}
