//! Minimal blocking client for the line protocol.

use std::io::{self, BufRead, BufReader, Write};
use std::net::{TcpStream, ToSocketAddrs};

use serde_json::{json, Value};

use super::protocol::{ErrorCode, ReplyOp, Request, Response};

#[derive(Debug, thiserror::Error)]
pub enum ClientError {
    #[error("transport: {0}")]
    Io(#[from] io::Error),
    #[error("malformed reply: {0}")]
    Decode(String),
    #[error("{code}: {message}")]
    Service { code: ErrorCode, message: String },
}

pub struct GymClient {
    reader: BufReader<TcpStream>,
    writer: TcpStream,
    next_id: u64,
    session_id: Option<String>,
}

impl GymClient {
    pub fn connect(addr: impl ToSocketAddrs) -> Result<Self, ClientError> {
        let writer = TcpStream::connect(addr)?;
        writer.set_nodelay(true)?;
        let reader = BufReader::new(writer.try_clone()?);
        Ok(GymClient {
            reader,
            writer,
            next_id: 1,
            session_id: None,
        })
    }

    pub fn session_id(&self) -> Option<&str> {
        self.session_id.as_deref()
    }

    /// Sends a raw request and returns the raw reply, errors included.
    pub fn send(&mut self, req: &Request) -> Result<Response, ClientError> {
        let mut line = serde_json::to_string(req).expect("request serializes");
        line.push('\n');
        self.writer.write_all(line.as_bytes())?;
        self.writer.flush()?;
        let mut line = String::new();
        if self.reader.read_line(&mut line)? == 0 {
            return Err(ClientError::Io(io::ErrorKind::UnexpectedEof.into()));
        }
        serde_json::from_str(&line).map_err(|e| ClientError::Decode(e.to_string()))
    }

    fn call(&mut self, op: &str, payload: Value) -> Result<Value, ClientError> {
        let id = self.next_id;
        self.next_id += 1;
        let req = Request::new(op, id, self.session_id.as_deref(), payload);
        let reply = self.send(&req)?;
        match reply.op {
            ReplyOp::Result => Ok(reply.payload),
            ReplyOp::Error => Err(ClientError::Service {
                code: reply
                    .error_code()
                    .ok_or_else(|| ClientError::Decode(reply.payload.to_string()))?,
                message: reply.payload["message"].as_str().unwrap_or_default().to_string(),
            }),
        }
    }

    pub fn hello(&mut self, variant: Option<&str>) -> Result<Value, ClientError> {
        let payload = match variant {
            Some(v) => json!({"variant": v}),
            None => json!({}),
        };
        let reply = self.call("hello", payload)?;
        self.session_id = reply["session_id"].as_str().map(str::to_string);
        Ok(reply)
    }

    pub fn reset_env(&mut self, env_id: &str) -> Result<Value, ClientError> {
        self.call("reset", json!({"env_id": env_id}))
    }

    pub fn reset_scenario(&mut self, scenario: &str, seed: u64) -> Result<Value, ClientError> {
        self.call("reset", json!({"scenario": scenario, "seed": seed}))
    }

    pub fn step(&mut self, assistant_text: &str) -> Result<Value, ClientError> {
        self.call("step", json!({"assistant_text": assistant_text}))
    }

    pub fn close(&mut self) -> Result<(), ClientError> {
        self.call("close", json!({}))?;
        self.session_id = None;
        Ok(())
    }
}
