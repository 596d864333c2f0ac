//! Service errors and their HTTP mapping: 404 for unknown things, 409 for
//! actions the session phase or task state does not allow, 422 for invalid
//! input, 502 for provider failures.

use axum::http::StatusCode;
use axum::response::{IntoResponse, Response};
use axum::Json;
use serde_json::json;

use sketchquest_core::canvas::CanvasError;
use sketchquest_core::domain::ReduceError;
use sketchquest_core::driver::EffectError;
use sketchquest_core::feedback::FeedbackError;
use sketchquest_core::quest::QuestError;
use sketchquest_core::scaffold::ScaffoldError;

use crate::eventlog::LogError;

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ApiError {
    pub status: StatusCode,
    pub code: &'static str,
    pub message: String,
}

impl ApiError {
    pub fn new(status: StatusCode, code: &'static str, message: impl Into<String>) -> Self {
        ApiError { status, code, message: message.into() }
    }

    pub fn not_found(what: &str, id: &str) -> Self {
        ApiError::new(StatusCode::NOT_FOUND, "not_found", format!("unknown {what} `{id}`"))
    }

    pub fn invalid(message: impl Into<String>) -> Self {
        ApiError::new(StatusCode::UNPROCESSABLE_ENTITY, "invalid", message)
    }

    pub fn internal(message: impl Into<String>) -> Self {
        ApiError::new(StatusCode::INTERNAL_SERVER_ERROR, "internal", message)
    }
}

impl std::fmt::Display for ApiError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "{} {}: {}", self.status.as_u16(), self.code, self.message)
    }
}

impl std::error::Error for ApiError {}

impl IntoResponse for ApiError {
    fn into_response(self) -> Response {
        (self.status, Json(json!({ "error": self.code, "message": self.message }))).into_response()
    }
}

fn canvas(e: &CanvasError) -> ApiError {
    match e {
        CanvasError::UnknownHelper(id) => ApiError::not_found("helper", id),
        other => ApiError::invalid(other.to_string()),
    }
}

impl From<CanvasError> for ApiError {
    fn from(e: CanvasError) -> Self {
        canvas(&e)
    }
}

impl From<ReduceError> for ApiError {
    fn from(e: ReduceError) -> Self {
        let message = e.to_string();
        match e {
            ReduceError::IllegalTransition { .. } => ApiError::new(StatusCode::CONFLICT, "illegal_transition", message),
            ReduceError::TaskNotReady { .. } => ApiError::new(StatusCode::CONFLICT, "task_not_ready", message),
            ReduceError::AlreadyCompleted(_) => ApiError::new(StatusCode::CONFLICT, "already_completed", message),
            ReduceError::UnknownTask(id) => ApiError::not_found("task", &id),
            ReduceError::Canvas(c) => canvas(&c),
            ReduceError::InvalidEvent(_) => ApiError::invalid(message),
            ReduceError::OutOfOrderEvent { .. } => ApiError::internal(message),
        }
    }
}

fn provider_failure(message: String) -> ApiError {
    ApiError::new(StatusCode::BAD_GATEWAY, "provider_failure", message)
}

impl From<ScaffoldError> for ApiError {
    fn from(e: ScaffoldError) -> Self {
        let message = e.to_string();
        match e {
            ScaffoldError::PhaseViolation(_) => ApiError::new(StatusCode::CONFLICT, "phase_violation", message),
            ScaffoldError::NoSuchHelper(hint) => ApiError::not_found("helper", &hint),
            ScaffoldError::UnsafeMarkup(_) | ScaffoldError::ProviderFailure(_) => provider_failure(message),
            ScaffoldError::Canvas(c) => canvas(&c),
        }
    }
}

impl From<EffectError> for ApiError {
    fn from(e: EffectError) -> Self {
        let message = e.to_string();
        match e {
            EffectError::Quest(QuestError::EmptyGoal) => ApiError::invalid(message),
            EffectError::Quest(_) | EffectError::Provider(_) => provider_failure(message),
            EffectError::Scaffold(s) => s.into(),
            EffectError::Feedback(FeedbackError::NotComposable(_)) => {
                ApiError::new(StatusCode::CONFLICT, "phase_violation", message)
            }
            EffectError::Feedback(_) => ApiError::internal(message),
        }
    }
}

impl From<LogError> for ApiError {
    fn from(e: LogError) -> Self {
        let code = match e {
            LogError::CorruptLog { .. } => "corrupt_log",
            LogError::Io { .. } => "storage",
        };
        ApiError::new(StatusCode::INTERNAL_SERVER_ERROR, code, e.to_string())
    }
}
