//! Line-JSON message grammar. Every request is one JSON object per line:
//!
//! ```text
//! {"op": "hello"|"reset"|"step"|"close", "request_id": <string|number>,
//!  "session_id": <string, not for hello>, "payload": {...}}
//! ```
//!
//! Every reply echoes `request_id` and carries `op` `"result"` or `"error"`.

use std::fmt;

use serde::{Deserialize, Serialize};
use serde_json::{json, Value};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Request {
    pub op: String,
    #[serde(default)]
    pub request_id: Value,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub session_id: Option<String>,
    #[serde(default)]
    pub payload: Value,
}

impl Request {
    pub fn new(op: &str, request_id: impl Into<Value>, session_id: Option<&str>, payload: Value) -> Self {
        Request {
            op: op.to_string(),
            request_id: request_id.into(),
            session_id: session_id.map(str::to_string),
            payload,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ReplyOp {
    Result,
    Error,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Response {
    pub op: ReplyOp,
    pub request_id: Value,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub session_id: Option<String>,
    pub payload: Value,
}

impl Response {
    pub fn result(request_id: Value, session_id: Option<String>, payload: Value) -> Self {
        Response {
            op: ReplyOp::Result,
            request_id,
            session_id,
            payload,
        }
    }

    pub fn error(request_id: Value, session_id: Option<String>, code: ErrorCode, message: impl Into<String>) -> Self {
        Response {
            op: ReplyOp::Error,
            request_id,
            session_id,
            payload: json!({"code": code, "message": message.into()}),
        }
    }

    pub fn error_code(&self) -> Option<ErrorCode> {
        match self.op {
            ReplyOp::Error => serde_json::from_value(self.payload["code"].clone()).ok(),
            ReplyOp::Result => None,
        }
    }

    pub fn to_line(&self) -> String {
        serde_json::to_string(self).expect("response serializes")
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "SCREAMING_SNAKE_CASE")]
pub enum ErrorCode {
    BadRequest,
    UnknownOp,
    UnknownSession,
    TooManySessions,
    NeedsReset,
    StepAfterDone,
    NotFound,
    BuildFailed,
}

impl fmt::Display for ErrorCode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let v = serde_json::to_value(self).expect("code serializes");
        f.write_str(v.as_str().unwrap_or("?"))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn request_defaults() {
        let r: Request = serde_json::from_str(r#"{"op":"hello","request_id":1}"#).unwrap();
        assert_eq!(r.session_id, None);
        assert_eq!(r.payload, Value::Null);
    }

    #[test]
    fn error_shape() {
        let r = Response::error(json!("a"), None, ErrorCode::NeedsReset, "reset first");
        assert_eq!(
            r.to_line(),
            r#"{"op":"error","request_id":"a","payload":{"code":"NEEDS_RESET","message":"reset first"}}"#
        );
        assert_eq!(r.error_code(), Some(ErrorCode::NeedsReset));
        assert_eq!(ErrorCode::StepAfterDone.to_string(), "STEP_AFTER_DONE");
    }
}
