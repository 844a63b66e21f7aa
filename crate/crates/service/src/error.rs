use axum::http::StatusCode;
use axum::response::{IntoResponse, Response};
use axum::Json;
use serde::Serialize;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum ServiceError {
    #[error("no scenario '{0}'")]
    UnknownScenario(String),
    #[error("no session '{0}'")]
    UnknownSession(String),
    #[error("invalid scenario: {0}")]
    InvalidScenario(String),
    #[error("{0}")]
    BadRequest(String),
    #[error("the session has finished")]
    Finished,
    #[error("it is not the human's turn")]
    NotYourTurn,
    #[error("move token '{0}' is not on the current menu")]
    StaleMove(String),
    #[error("dialogue engine: {0}")]
    Dialogue(#[from] drhai_core::DialogueError),
    #[error("reconciliation: {0}")]
    Reconcile(#[from] drhai_core::ReconcileError),
    #[error("storage: {0}")]
    Storage(#[from] std::io::Error),
    #[error("corrupt event log: {0}")]
    Corrupt(String),
}

#[derive(Serialize)]
struct ErrorBody {
    error: &'static str,
    detail: String,
}

impl ServiceError {
    fn parts(&self) -> (StatusCode, &'static str) {
        match self {
            ServiceError::UnknownScenario(_) => (StatusCode::NOT_FOUND, "unknown_scenario"),
            ServiceError::UnknownSession(_) => (StatusCode::NOT_FOUND, "unknown_session"),
            ServiceError::InvalidScenario(_) => (StatusCode::UNPROCESSABLE_ENTITY, "invalid_scenario"),
            ServiceError::BadRequest(_) => (StatusCode::BAD_REQUEST, "bad_request"),
            ServiceError::Finished => (StatusCode::CONFLICT, "session_finished"),
            ServiceError::NotYourTurn => (StatusCode::CONFLICT, "not_your_turn"),
            ServiceError::StaleMove(_) => (StatusCode::CONFLICT, "stale_move"),
            ServiceError::Dialogue(_) => (StatusCode::INTERNAL_SERVER_ERROR, "dialogue_error"),
            ServiceError::Reconcile(_) => (StatusCode::INTERNAL_SERVER_ERROR, "reconcile_error"),
            ServiceError::Storage(_) | ServiceError::Corrupt(_) => (StatusCode::INTERNAL_SERVER_ERROR, "storage_error"),
        }
    }
}

impl IntoResponse for ServiceError {
    fn into_response(self) -> Response {
        let (status, error) = self.parts();
        if status.is_server_error() {
            tracing::error!(error = %self, "request failed");
        }
        (status, Json(ErrorBody { error, detail: self.to_string() })).into_response()
    }
}
