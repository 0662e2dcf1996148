//! Error bodies: every failure is `{"code": ..., "message": ...}`.

use axum::http::StatusCode;
use axum::response::{IntoResponse, Response};
use axum::Json;
use lemmagraph_core::annotate::AnnotateError;
use lemmagraph_core::auth::AuthError;
use lemmagraph_core::graph::GraphError;
use lemmagraph_core::ingest::IngestError;
use lemmagraph_core::qengine::QueryError;
use lemmagraph_core::qtemplate::TemplateError;
use lemmagraph_core::store::StoreError;
use serde::Serialize;

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ApiError {
    pub status: StatusCode,
    pub code: &'static str,
    pub message: String,
}

#[derive(Serialize)]
struct ErrorBody<'a> {
    code: &'a str,
    message: &'a str,
}

impl ApiError {
    pub fn new(status: StatusCode, code: &'static str, message: impl Into<String>) -> Self {
        ApiError {
            status,
            code,
            message: message.into(),
        }
    }

    pub fn bad_request(code: &'static str, message: impl Into<String>) -> Self {
        Self::new(StatusCode::BAD_REQUEST, code, message)
    }

    pub fn not_found(message: impl Into<String>) -> Self {
        Self::new(StatusCode::NOT_FOUND, "not_found", message)
    }

    pub fn unauthorized() -> Self {
        Self::new(
            StatusCode::UNAUTHORIZED,
            "unauthorized",
            AuthError::InvalidSession.to_string(),
        )
    }

    fn internal(message: impl Into<String>) -> Self {
        let message = message.into();
        tracing::error!("{message}");
        Self::new(StatusCode::INTERNAL_SERVER_ERROR, "internal", message)
    }
}

impl IntoResponse for ApiError {
    fn into_response(self) -> Response {
        let body = ErrorBody {
            code: self.code,
            message: &self.message,
        };
        (self.status, Json(body)).into_response()
    }
}

impl From<StoreError> for ApiError {
    fn from(e: StoreError) -> Self {
        match &e {
            StoreError::Validation(_) => ApiError::bad_request("validation", e.to_string()),
            StoreError::Constraint { .. } => ApiError::new(StatusCode::CONFLICT, "constraint", e.to_string()),
            StoreError::NotFound(_) => ApiError::not_found(e.to_string()),
            StoreError::Unrecoverable(_) | StoreError::Io(_) | StoreError::Database(_) => {
                ApiError::internal(e.to_string())
            }
        }
    }
}

impl From<AuthError> for ApiError {
    fn from(e: AuthError) -> Self {
        match e {
            AuthError::InvalidCredentials => ApiError::new(StatusCode::UNAUTHORIZED, "invalid_credentials", e.to_string()),
            AuthError::InvalidSession => ApiError::unauthorized(),
            AuthError::Forbidden(_) => ApiError::new(StatusCode::FORBIDDEN, "forbidden", e.to_string()),
            AuthError::DuplicateUsername(_) => ApiError::new(StatusCode::CONFLICT, "duplicate_username", e.to_string()),
            AuthError::Validation(_) => ApiError::bad_request("validation", e.to_string()),
            AuthError::UnknownUser(_) => ApiError::not_found(e.to_string()),
            AuthError::Store(s) => s.into(),
        }
    }
}

impl From<AnnotateError> for ApiError {
    fn from(e: AnnotateError) -> Self {
        match e {
            AnnotateError::Auth(a) => a.into(),
            AnnotateError::Store(s) => s.into(),
            AnnotateError::UnknownType { .. } => {
                ApiError::new(StatusCode::UNPROCESSABLE_ENTITY, "unknown_type", e.to_string())
            }
            AnnotateError::NotFound(_) => ApiError::not_found(e.to_string()),
            AnnotateError::InUse { .. } => ApiError::new(StatusCode::CONFLICT, "in_use", e.to_string()),
            AnnotateError::TokenConflict(_) => ApiError::new(StatusCode::CONFLICT, "token_conflict", e.to_string()),
            AnnotateError::NotPermitted(_) => ApiError::new(StatusCode::FORBIDDEN, "forbidden", e.to_string()),
            AnnotateError::Validation(_) => ApiError::bad_request("validation", e.to_string()),
        }
    }
}

impl From<IngestError> for ApiError {
    fn from(e: IngestError) -> Self {
        match e {
            IngestError::Store(s) => s.into(),
            IngestError::Encoding { .. } | IngestError::Json { .. } => ApiError::bad_request("malformed_json", e.to_string()),
            IngestError::Validation { .. } | IngestError::Template { .. } | IngestError::Arity { .. } => {
                ApiError::bad_request("validation", e.to_string())
            }
            IngestError::CorpusNotFound(_) => ApiError::not_found(e.to_string()),
            IngestError::DuplicateChapter(_) => ApiError::new(StatusCode::CONFLICT, "duplicate_chapter", e.to_string()),
        }
    }
}

impl From<GraphError> for ApiError {
    fn from(e: GraphError) -> Self {
        match e {
            GraphError::Policy(_) => ApiError::bad_request("validation", e.to_string()),
            GraphError::Store(s) => s.into(),
            other => ApiError::internal(other.to_string()),
        }
    }
}

impl From<QueryError> for ApiError {
    fn from(e: QueryError) -> Self {
        let code = match e {
            QueryError::Syntax(_) => "syntax_error",
            QueryError::Semantic { .. } => "semantic_error",
            QueryError::Regex { .. } => "invalid_regex",
        };
        ApiError::bad_request(code, e.to_string())
    }
}

impl From<TemplateError> for ApiError {
    fn from(e: TemplateError) -> Self {
        match e {
            TemplateError::Query(q) => q.into(),
            TemplateError::UnknownLanguage { .. } => ApiError::bad_request("unknown_language", e.to_string()),
            TemplateError::Arity { .. } => ApiError::bad_request("arity", e.to_string()),
            TemplateError::RejectedInput { .. } => ApiError::bad_request("rejected_input", e.to_string()),
            TemplateError::Definition { .. } => ApiError::internal(e.to_string()),
        }
    }
}
