use axum::http::StatusCode;
use axum::response::{IntoResponse, Response};
use axum::Json;
use serde::{Deserialize, Serialize};

use actorsnote_core::ServiceError;

/// Codes added by the HTTP layer on top of [`ServiceError::code`].
pub const BAD_REQUEST: &str = "BadRequest";
pub const UNAUTHORIZED: &str = "Unauthorized";
pub const TOO_LARGE: &str = "TooLarge";
pub const INTERNAL: &str = "Internal";

/// Every code an error body can carry.
pub const ERROR_CODES: [&str; 26] = [
    BAD_REQUEST,
    UNAUTHORIZED,
    TOO_LARGE,
    INTERNAL,
    "UnknownRole",
    "NotAnalyzed",
    "NotAiSession",
    "MalformedResponse",
    "UnsupportedFormat",
    "ExtractionFailed",
    "EmptyAfterExtraction",
    "EmptyUpload",
    "InvalidConfig",
    "ProviderError",
    "ScriptNotFound",
    "ParticipantNotFound",
    "SessionNotFound",
    "EntryNotFound",
    "OutOfStudyWindow",
    "ConditionMismatch",
    "ClockSkew",
    "EmptyText",
    "BadSelection",
    "SessionClosed",
    "ScheduleLocked",
    "StoreFailure",
];

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ApiError {
    pub code: String,
    pub message: String,
    pub http_status: u16,
}

impl ApiError {
    pub fn new(status: StatusCode, code: &str, message: impl Into<String>) -> Self {
        Self {
            code: code.to_string(),
            message: message.into(),
            http_status: status.as_u16(),
        }
    }

    pub fn bad_request(message: impl Into<String>) -> Self {
        Self::new(StatusCode::BAD_REQUEST, BAD_REQUEST, message)
    }

    pub fn unauthorized() -> Self {
        Self::new(StatusCode::UNAUTHORIZED, UNAUTHORIZED, "missing or invalid bearer token")
    }

    pub fn internal(message: impl Into<String>) -> Self {
        Self::new(StatusCode::INTERNAL_SERVER_ERROR, INTERNAL, message)
    }
}

pub fn status_for(code: &str) -> StatusCode {
    match code {
        "UnsupportedFormat" | "EmptyAfterExtraction" | "EmptyUpload" | "EmptyText" | "BadSelection" => {
            StatusCode::BAD_REQUEST
        }
        "UnknownRole" | "ScriptNotFound" | "ParticipantNotFound" | "SessionNotFound" | "EntryNotFound" => {
            StatusCode::NOT_FOUND
        }
        "NotAnalyzed" | "NotAiSession" | "OutOfStudyWindow" | "ClockSkew" | "SessionClosed" | "ScheduleLocked" => {
            StatusCode::CONFLICT
        }
        "MalformedResponse" | "ExtractionFailed" => StatusCode::UNPROCESSABLE_ENTITY,
        "ProviderError" => StatusCode::BAD_GATEWAY,
        _ => StatusCode::INTERNAL_SERVER_ERROR,
    }
}

impl From<ServiceError> for ApiError {
    fn from(e: ServiceError) -> Self {
        let code = e.code();
        Self::new(status_for(code), code, e.to_string())
    }
}

impl IntoResponse for ApiError {
    fn into_response(self) -> Response {
        let status = StatusCode::from_u16(self.http_status).unwrap_or(StatusCode::INTERNAL_SERVER_ERROR);
        (status, Json(self)).into_response()
    }
}
