use axum::http::StatusCode;
use axum::response::{IntoResponse, Response};
use axum::Json;
use mdp_core::Error as CoreError;
use serde_json::{json, Value};

/// Error body: `{code, message, detail}`.
#[derive(Debug, Clone)]
pub struct ApiError {
    pub status: StatusCode,
    pub code: &'static str,
    pub message: String,
    pub detail: Value,
}

impl ApiError {
    pub fn new(status: StatusCode, code: &'static str, message: impl Into<String>) -> Self {
        ApiError {
            status,
            code,
            message: message.into(),
            detail: Value::Null,
        }
    }

    pub fn with_detail(mut self, detail: Value) -> Self {
        self.detail = detail;
        self
    }

    pub fn not_found(what: &str, id: &str) -> Self {
        ApiError::new(
            StatusCode::NOT_FOUND,
            "not_found",
            format!("no {what} with id {id}"),
        )
    }

    pub fn bad_request(code: &'static str, message: impl Into<String>) -> Self {
        ApiError::new(StatusCode::BAD_REQUEST, code, message)
    }

    pub fn conflict(message: impl Into<String>, detail: Value) -> Self {
        ApiError::new(StatusCode::CONFLICT, "conflict", message).with_detail(detail)
    }

    pub fn internal(message: impl Into<String>) -> Self {
        ApiError::new(StatusCode::INTERNAL_SERVER_ERROR, "internal", message)
    }
}

impl From<CoreError> for ApiError {
    fn from(e: CoreError) -> Self {
        let message = e.to_string();
        let (code, detail) = match &e {
            CoreError::Parse { line, column, .. } => {
                ("parse_error", json!({ "line": line, "column": column }))
            }
            CoreError::InvalidRing { ring, vertex, .. } => {
                ("invalid_domain", json!({ "ring": ring, "vertex": vertex }))
            }
            CoreError::SelfIntersection {
                ring,
                edge_a,
                edge_b,
            } => (
                "invalid_domain",
                json!({ "ring": ring, "edge_a": edge_a, "edge_b": edge_b }),
            ),
            CoreError::HoleOutside { ring, vertex, .. } => {
                ("invalid_domain", json!({ "ring": ring, "vertex": vertex }))
            }
            CoreError::HolesOverlap(a, b) => ("invalid_domain", json!({ "holes": [a, b] })),
            CoreError::NonFinite(_) | CoreError::EmptyGeometry => ("invalid_domain", Value::Null),
            CoreError::DegeneratePointSet(i, j) => ("invalid_op", json!({ "vertices": [i, j] })),
            _ => ("invalid_input", Value::Null),
        };
        ApiError::bad_request(code, message).with_detail(detail)
    }
}

impl IntoResponse for ApiError {
    fn into_response(self) -> Response {
        let body = json!({
            "code": self.code,
            "message": self.message,
            "detail": self.detail,
        });
        (self.status, Json(body)).into_response()
    }
}
