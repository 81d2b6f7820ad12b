//! Request and response envelopes.

use serde::{Deserialize, Serialize};
use serde_json::Value as Json;

pub const METHOD_NOT_FOUND: i64 = 601;
pub const INVALID_PARAMS: i64 = 400;
pub const PRIVACY_VIOLATION: i64 = 403;
pub const NOT_FOUND: i64 = 404;
pub const CONFLICT: i64 = 409;
pub const SCHEMA_MISMATCH: i64 = 422;
pub const INTERNAL: i64 = 500;

#[derive(Debug, Clone, PartialEq, Deserialize, Serialize)]
pub struct Request {
    #[serde(default)]
    pub id: Json,
    pub method: String,
    #[serde(default)]
    pub params: Json,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize, thiserror::Error)]
#[error("{code}: {message}")]
pub struct RpcError {
    pub code: i64,
    pub message: String,
}

impl RpcError {
    pub fn new(code: i64, message: impl Into<String>) -> RpcError {
        RpcError { code, message: message.into() }
    }

    pub fn invalid_params(message: impl Into<String>) -> RpcError {
        RpcError::new(INVALID_PARAMS, message)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Response {
    pub id: Json,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub result: Option<Json>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub error: Option<RpcError>,
}

impl Response {
    pub fn from_outcome(id: Json, outcome: Result<Json, RpcError>) -> Response {
        match outcome {
            Ok(result) => Response { id, result: Some(result), error: None },
            Err(error) => Response { id, result: None, error: Some(error) },
        }
    }

    pub fn to_line(&self) -> String {
        serde_json::to_string(self).expect("responses always serialize")
    }
}

/// Decode one envelope. A body that is not a request still gets an answer,
/// carrying whatever id could be recovered.
pub fn decode(body: &str) -> Result<Request, Response> {
    match serde_json::from_str::<Request>(body) {
        Ok(r) => Ok(r),
        Err(e) => {
            let id = serde_json::from_str::<Json>(body).ok().and_then(|v| v.get("id").cloned()).unwrap_or(Json::Null);
            Err(Response::from_outcome(id, Err(RpcError::invalid_params(format!("malformed request: {e}")))))
        }
    }
}
