//! JSON API.
//!
//! | route | body | reply |
//! |---|---|---|
//! | `POST /sessions` | `{goal}` | 201, session view |
//! | `GET /sessions/{id}` | | session view |
//! | `POST /sessions/{id}/strokes` | `{stroke}` | session view |
//! | `POST /sessions/{id}/helpers` | `{hint}` | `{helper}` (not yet placed) |
//! | `POST /sessions/{id}/helpers/{helper_id}/place` | `{position}` | session view |
//! | `POST /sessions/{id}/check` | | `{cards, session}` |
//! | `POST /sessions/{id}/tasks/{task_id}/complete` | | `{cards, session}` |
//! | `POST /sessions/{id}/style` | `{style, seed}` | `{artifact_ref, url, session}` |
//! | `GET /sessions/{id}/canvas.png?width=&height=` | | PNG |
//! | `GET /sessions/{id}/style/{artifact_ref}` | | PNG |
//!
//! Errors are `{error, message}` with the status chosen in [`crate::error`].

use std::sync::Arc;

use axum::extract::rejection::JsonRejection;
use axum::extract::{Path, Query, State};
use axum::http::{header, StatusCode};
use axum::response::{IntoResponse, Response};
use axum::routing::{get, post};
use axum::{Json, Router};
use serde::{Deserialize, Serialize};

use sketchquest_core::canvas::{export_raster, CanvasDocument, HelperObject, Point, Stroke};
use sketchquest_core::domain::{EventKind, FeedbackCard, GemLedger, Quest, Session, SessionPhase, StyleArtifact};
use sketchquest_core::StyleKind;

use crate::error::ApiError;
use crate::sessions::{Outcome, Registry};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Progress {
    pub done: usize,
    pub total: usize,
}

/// What clients see of a session.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SessionView {
    pub session_id: String,
    pub phase: SessionPhase,
    pub goal: Option<String>,
    pub quest: Option<Quest>,
    pub current_task_id: Option<String>,
    pub progress: Progress,
    pub gems: GemLedger,
    pub feedback_log: Vec<FeedbackCard>,
    pub canvas_revision: u64,
    pub canvas: CanvasDocument,
    pub style: Option<StyleKind>,
    pub artifacts: Vec<StyleArtifact>,
    pub event_seq: u64,
}

impl From<&Session> for SessionView {
    fn from(s: &Session) -> Self {
        SessionView {
            session_id: s.session_id.clone(),
            phase: s.phase,
            goal: s.goal.clone(),
            quest: s.quest.clone(),
            current_task_id: s.current_task().map(|t| t.task_id.clone()),
            progress: Progress {
                done: s.quest.as_ref().map_or(0, Quest::completed_count),
                total: s.quest.as_ref().map_or(0, |q| q.tasks.len()),
            },
            gems: s.gems.clone(),
            feedback_log: s.feedback_log.clone(),
            canvas_revision: s.canvas.revision,
            canvas: s.canvas.clone(),
            style: s.style,
            artifacts: s.artifacts.clone(),
            event_seq: s.event_seq,
        }
    }
}

#[derive(Debug, Serialize, Deserialize)]
pub struct CreateSession {
    pub goal: String,
}

#[derive(Debug, Serialize, Deserialize)]
pub struct AddStroke {
    pub stroke: Stroke,
}

#[derive(Debug, Serialize, Deserialize)]
pub struct HelperRequest {
    pub hint: String,
}

#[derive(Debug, Serialize, Deserialize)]
pub struct HelperReply {
    pub helper: HelperObject,
}

#[derive(Debug, Serialize, Deserialize)]
pub struct Placement {
    pub position: Point,
}

#[derive(Debug, Serialize, Deserialize)]
pub struct CardsReply {
    pub cards: Vec<FeedbackCard>,
    pub session: SessionView,
}

#[derive(Debug, Serialize, Deserialize)]
pub struct StyleRequest {
    pub style: StyleKind,
    #[serde(default)]
    pub seed: u64,
}

#[derive(Debug, Serialize, Deserialize)]
pub struct StyleReply {
    pub artifact_ref: String,
    pub url: String,
    pub session: SessionView,
}

#[derive(Debug, Deserialize)]
pub struct ExportSize {
    width: Option<u32>,
    height: Option<u32>,
}

type AppState = Arc<Registry>;

pub fn router(registry: Arc<Registry>) -> Router {
    Router::new()
        .route("/sessions", post(create_session))
        .route("/sessions/{id}", get(get_session))
        .route("/sessions/{id}/strokes", post(add_stroke))
        .route("/sessions/{id}/helpers", post(request_helper))
        .route("/sessions/{id}/helpers/{helper_id}/place", post(place_helper))
        .route("/sessions/{id}/check", post(check))
        .route("/sessions/{id}/tasks/{task_id}/complete", post(complete_task))
        .route("/sessions/{id}/style", post(apply_style))
        .route("/sessions/{id}/canvas.png", get(canvas_png))
        .route("/sessions/{id}/style/{artifact_ref}", get(style_png))
        .with_state(registry)
}

fn body<T>(body: Result<Json<T>, JsonRejection>) -> Result<T, ApiError> {
    body.map(|Json(b)| b).map_err(|e| ApiError::invalid(e.body_text()))
}

fn view(outcome: &Outcome) -> Json<SessionView> {
    Json(SessionView::from(outcome.session.as_ref()))
}

fn cards(outcome: Outcome) -> Json<CardsReply> {
    Json(CardsReply { session: SessionView::from(outcome.session.as_ref()), cards: outcome.cards })
}

fn png(bytes: Vec<u8>) -> Response {
    ([(header::CONTENT_TYPE, "image/png")], bytes).into_response()
}

async fn create_session(
    State(registry): State<AppState>,
    req: Result<Json<CreateSession>, JsonRejection>,
) -> Result<(StatusCode, Json<SessionView>), ApiError> {
    let req = body(req)?;
    let (_, outcome) = registry.create(&req.goal).await?;
    Ok((StatusCode::CREATED, view(&outcome)))
}

async fn get_session(State(registry): State<AppState>, Path(id): Path<String>) -> Result<Json<SessionView>, ApiError> {
    let handle = registry.get(&id).await?;
    Ok(Json(SessionView::from(handle.snapshot().as_ref())))
}

async fn add_stroke(
    State(registry): State<AppState>,
    Path(id): Path<String>,
    req: Result<Json<AddStroke>, JsonRejection>,
) -> Result<Json<SessionView>, ApiError> {
    let handle = registry.get(&id).await?;
    let req = body(req)?;
    Ok(view(&handle.submit(EventKind::StrokeAdded { stroke: req.stroke }).await?))
}

async fn request_helper(
    State(registry): State<AppState>,
    Path(id): Path<String>,
    req: Result<Json<HelperRequest>, JsonRejection>,
) -> Result<Json<HelperReply>, ApiError> {
    let handle = registry.get(&id).await?;
    let req = body(req)?;
    Ok(Json(HelperReply { helper: handle.request_helper(req.hint).await? }))
}

async fn place_helper(
    State(registry): State<AppState>,
    Path((id, helper_id)): Path<(String, String)>,
    req: Result<Json<Placement>, JsonRejection>,
) -> Result<Json<SessionView>, ApiError> {
    let handle = registry.get(&id).await?;
    let req = body(req)?;
    Ok(view(&handle.place_helper(helper_id, req.position).await?))
}

async fn check(State(registry): State<AppState>, Path(id): Path<String>) -> Result<Json<CardsReply>, ApiError> {
    let handle = registry.get(&id).await?;
    Ok(cards(handle.submit(EventKind::CheckRequested).await?))
}

async fn complete_task(
    State(registry): State<AppState>,
    Path((id, task_id)): Path<(String, String)>,
) -> Result<Json<CardsReply>, ApiError> {
    let handle = registry.get(&id).await?;
    Ok(cards(handle.submit(EventKind::TaskCompletionConfirmed { task_id }).await?))
}

async fn apply_style(
    State(registry): State<AppState>,
    Path(id): Path<String>,
    req: Result<Json<StyleRequest>, JsonRejection>,
) -> Result<Json<StyleReply>, ApiError> {
    let handle = registry.get(&id).await?;
    let req = body(req)?;
    let outcome = handle.submit(EventKind::StyleRequested { style: req.style, seed: req.seed }).await?;
    let artifact_ref = outcome
        .artifacts
        .last()
        .cloned()
        .ok_or_else(|| ApiError::internal("style produced no image"))?;
    Ok(Json(StyleReply {
        url: format!("/sessions/{id}/style/{artifact_ref}"),
        artifact_ref,
        session: SessionView::from(outcome.session.as_ref()),
    }))
}

async fn canvas_png(
    State(registry): State<AppState>,
    Path(id): Path<String>,
    Query(size): Query<ExportSize>,
) -> Result<Response, ApiError> {
    let handle = registry.get(&id).await?;
    let (width, height) = (size.width.unwrap_or(1024), size.height.unwrap_or(768));
    let session = handle.snapshot();
    let bytes = tokio::task::spawn_blocking(move || export_raster(&session.canvas, width, height))
        .await
        .map_err(|e| ApiError::internal(e.to_string()))??;
    Ok(png(bytes))
}

async fn style_png(
    State(registry): State<AppState>,
    Path((id, artifact_ref)): Path<(String, String)>,
) -> Result<Response, ApiError> {
    let handle = registry.get(&id).await?;
    let path = handle.artifact_path(&artifact_ref).ok_or_else(|| ApiError::not_found("artifact", &artifact_ref))?;
    let bytes = tokio::task::spawn_blocking(move || std::fs::read(&path).map_err(|e| format!("{}: {e}", path.display())))
        .await
        .map_err(|e| ApiError::internal(e.to_string()))?
        .map_err(ApiError::internal)?;
    Ok(png(bytes))
}
