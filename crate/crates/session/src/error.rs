use argx_core::exchange::{ExchangeError, Status};
use axum::http::StatusCode;
use axum::response::{IntoResponse, Response};
use axum::Json;
use serde::Serialize;
use serde_json::Value;

/// Error body shared by every endpoint.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ErrorBody {
    pub code: &'static str,
    pub message: String,
    pub detail: Value,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ApiError {
    pub status: StatusCode,
    pub body: ErrorBody,
}

impl ApiError {
    pub fn new(status: StatusCode, code: &'static str, message: impl Into<String>, detail: Option<Value>) -> Self {
        Self {
            status,
            body: ErrorBody {
                code,
                message: message.into(),
                detail: detail.unwrap_or(Value::Null),
            },
        }
    }

    pub fn invalid_config(message: impl Into<String>) -> Self {
        Self::new(StatusCode::BAD_REQUEST, "invalid_config", message, None)
    }

    pub fn bad_request(code: &'static str, message: impl Into<String>) -> Self {
        Self::new(StatusCode::BAD_REQUEST, code, message, None)
    }

    pub fn not_found(id: &str) -> Self {
        Self::new(
            StatusCode::NOT_FOUND,
            "not_found",
            format!("no session `{id}`"),
            Some(serde_json::json!({ "id": id })),
        )
    }

    pub fn conflict(code: &'static str, message: impl Into<String>, detail: Option<Value>) -> Self {
        Self::new(StatusCode::CONFLICT, code, message, detail)
    }

    pub fn unprocessable(code: &'static str, message: impl Into<String>) -> Self {
        Self::new(StatusCode::UNPROCESSABLE_ENTITY, code, message, None)
    }

    pub fn unprocessable_with(code: &'static str, message: impl Into<String>, detail: Value) -> Self {
        Self::new(StatusCode::UNPROCESSABLE_ENTITY, code, message, Some(detail))
    }

    pub fn internal(message: impl Into<String>) -> Self {
        Self::new(StatusCode::INTERNAL_SERVER_ERROR, "internal", message, None)
    }

    pub fn finished(status: Status) -> Self {
        Self::conflict(
            "finished",
            format!("the exchange is over ({status})"),
            serde_json::to_value(status).ok(),
        )
    }

    pub fn from_engine(e: ExchangeError) -> Self {
        let message = e.to_string();
        match e {
            ExchangeError::Finished(status) => Self::finished(status),
            ExchangeError::NotScheduled { .. } | ExchangeError::AlreadyActed { .. } => {
                Self::conflict("out_of_turn", message, None)
            }
            ExchangeError::Untruthful { edge, polarity, .. } => Self::unprocessable_with(
                "untruthful_edge",
                message,
                serde_json::json!({ "from": edge.from, "to": edge.to, "polarity": polarity }),
            ),
            ExchangeError::DuplicateEdge(edge) => Self::unprocessable_with(
                "duplicate_edge",
                message,
                serde_json::json!({ "from": edge.from, "to": edge.to }),
            ),
            ExchangeError::InvalidExchange(_) => Self::unprocessable("invalid_exchange", message),
            ExchangeError::BiasOutOfRange { arg, bias, .. } => Self::unprocessable_with(
                "bias_out_of_range",
                message,
                serde_json::json!({ "arg": arg, "bias": bias }),
            ),
            _ => Self::internal(message),
        }
    }
}

impl IntoResponse for ApiError {
    fn into_response(self) -> Response {
        (self.status, Json(self.body)).into_response()
    }
}
