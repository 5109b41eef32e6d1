use std::sync::Arc;

use axum::body::Bytes;
use axum::extract::rejection::JsonRejection;
use axum::extract::{Path, Query, State};
use axum::http::{header, StatusCode};
use axum::response::{IntoResponse, Response};
use axum::routing::{get, post};
use axum::{Json, Router};
use meshpref_core::analysis::Grouping;
use serde::de::DeserializeOwned;
use serde::Deserialize;

use crate::error::ServiceError;
use crate::service::{AssetKind, Service};
use crate::views::{ChoiceRequest, CreateExperiment, QuestionnaireRequest, StartSession};

type Shared = State<Arc<Service>>;

/// Routes of the participant and experimenter API.
pub fn router(service: Arc<Service>) -> Router {
    Router::new()
        .route("/experiments", post(create_experiment))
        .route("/experiments/{id}/sessions", post(start_session))
        .route("/experiments/{id}/report", get(report))
        .route("/experiments/{id}/events", get(events))
        .route("/sessions/{id}/current", get(current))
        .route("/sessions/{id}/choices", post(choice))
        .route("/sessions/{id}/questionnaire", post(questionnaire))
        .route("/assets/{exp}/{stim}/{kind}", get(asset))
        .with_state(service)
}

/// Runs blocking service work (file I/O with fsync) off the async executor.
async fn blocking<T: Send + 'static>(f: impl FnOnce() -> Result<T, ServiceError> + Send + 'static) -> Result<T, ServiceError> {
    tokio::task::spawn_blocking(f)
        .await
        .map_err(|e| ServiceError::Internal(format!("worker failed: {e}")))?
}

/// Malformed bodies are client errors (400), whatever axum would pick.
fn body<T: DeserializeOwned>(json: Result<Json<serde_json::Value>, JsonRejection>) -> Result<T, ServiceError> {
    let Json(value) = json.map_err(|e| ServiceError::BadRequest(e.body_text()))?;
    serde_json::from_value(value).map_err(|e| ServiceError::BadRequest(e.to_string()))
}

async fn create_experiment(State(svc): Shared, json: Result<Json<serde_json::Value>, JsonRejection>) -> Result<Response, ServiceError> {
    let req: CreateExperiment = body(json)?;
    let created = blocking(move || svc.create_experiment(req)).await?;
    Ok((StatusCode::CREATED, Json(created)).into_response())
}

async fn start_session(State(svc): Shared, Path(id): Path<String>, raw: Bytes) -> Result<Response, ServiceError> {
    let req: StartSession = if raw.iter().all(u8::is_ascii_whitespace) {
        StartSession::default()
    } else {
        serde_json::from_slice(&raw).map_err(|e| ServiceError::BadRequest(e.to_string()))?
    };
    let created = blocking(move || svc.start_session(&id, req)).await?;
    Ok((StatusCode::CREATED, Json(created)).into_response())
}

async fn current(State(svc): Shared, Path(id): Path<String>) -> Result<Response, ServiceError> {
    let view = blocking(move || svc.current(&id)).await?;
    Ok(Json(view).into_response())
}

async fn choice(
    State(svc): Shared,
    Path(id): Path<String>,
    json: Result<Json<serde_json::Value>, JsonRejection>,
) -> Result<Response, ServiceError> {
    let req: ChoiceRequest = body(json)?;
    let view = blocking(move || svc.submit_choice(&id, req)).await?;
    Ok(Json(view).into_response())
}

async fn questionnaire(
    State(svc): Shared,
    Path(id): Path<String>,
    json: Result<Json<serde_json::Value>, JsonRejection>,
) -> Result<Response, ServiceError> {
    let req: QuestionnaireRequest = body(json)?;
    let done = blocking(move || svc.submit_questionnaire(&id, req)).await?;
    Ok(Json(done).into_response())
}

#[derive(Deserialize)]
struct ReportQuery {
    #[serde(default)]
    group_by: Option<String>,
}

async fn report(State(svc): Shared, Path(id): Path<String>, Query(q): Query<ReportQuery>) -> Result<Response, ServiceError> {
    let grouping: Grouping = q.group_by.as_deref().unwrap_or("none").parse().map_err(ServiceError::BadRequest)?;
    let report = blocking(move || svc.report(&id, grouping)).await?;
    Ok(Json(report).into_response())
}

async fn events(State(svc): Shared, Path(id): Path<String>) -> Result<Response, ServiceError> {
    let bytes = blocking(move || svc.export_events(&id)).await?;
    Ok(([(header::CONTENT_TYPE, "application/x-ndjson")], bytes).into_response())
}

fn content_type(path: &std::path::Path) -> &'static str {
    match path.extension().and_then(|e| e.to_str()).map(str::to_ascii_lowercase).as_deref() {
        Some("obj") => "model/obj",
        Some("png") => "image/png",
        Some("jpg") | Some("jpeg") => "image/jpeg",
        _ => "application/octet-stream",
    }
}

async fn asset(State(svc): Shared, Path((exp, stim, kind)): Path<(String, String, String)>) -> Result<Response, ServiceError> {
    let kind = match kind.as_str() {
        "mesh" => AssetKind::Mesh,
        "texture" => AssetKind::Texture,
        other => return Err(ServiceError::NotFound(format!("unknown asset kind `{other}`"))),
    };
    let path = svc.asset(&exp, &stim, kind)?;
    let bytes = tokio::fs::read(&path)
        .await
        .map_err(|e| ServiceError::NotFound(format!("{}: {e}", path.display())))?;
    Ok(([(header::CONTENT_TYPE, content_type(&path))], bytes).into_response())
}

/// Serves until Ctrl-C.
pub async fn serve(service: Arc<Service>, addr: &str) -> std::io::Result<()> {
    let listener = tokio::net::TcpListener::bind(addr).await?;
    tracing::info!(addr = %listener.local_addr()?, "listening");
    axum::serve(listener, router(service))
        .with_graceful_shutdown(async {
            let _ = tokio::signal::ctrl_c().await;
        })
        .await
}
