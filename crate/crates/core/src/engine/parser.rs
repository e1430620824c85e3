use serde::{Deserialize, Serialize};
use serde_json::Value;

use crate::runtime::ToolCall;

const CALL_OPEN: &str = "<tool_call>";
const CALL_CLOSE: &str = "</tool_call>";
const THINK_OPEN: &str = "<think>";
const THINK_CLOSE: &str = "</think>";

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TurnKind {
    ToolCalls,
    FinalAnswer,
    Empty,
    FormatError,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ParsedTurn {
    pub kind: TurnKind,
    pub calls: Vec<ToolCall>,
    /// Raw message as received.
    pub text: String,
    /// Message with reasoning blocks removed, trimmed.
    pub content: String,
    pub error_detail: Option<String>,
}

impl ParsedTurn {
    fn new(kind: TurnKind, text: &str, content: String) -> Self {
        ParsedTurn {
            kind,
            calls: Vec::new(),
            text: text.to_string(),
            content,
            error_detail: None,
        }
    }
}

/// Removes `<think>...</think>` blocks. A dangling `</think>` drops
/// everything before it; a dangling `<think>` drops everything after it.
pub fn strip_reasoning(text: &str) -> String {
    let mut out = String::with_capacity(text.len());
    let mut rest = text;
    loop {
        let open = rest.find(THINK_OPEN);
        let close = rest.find(THINK_CLOSE);
        match (open, close) {
            (None, None) => {
                out.push_str(rest);
                break;
            }
            (_, Some(c)) if open.is_none_or(|o| c < o) => {
                // closing tag with no opening before it
                out.clear();
                rest = &rest[c + THINK_CLOSE.len()..];
            }
            (Some(o), _) => {
                out.push_str(&rest[..o]);
                let after = &rest[o + THINK_OPEN.len()..];
                match after.find(THINK_CLOSE) {
                    Some(c) => rest = &after[c + THINK_CLOSE.len()..],
                    None => break,
                }
            }
            (None, Some(_)) => unreachable!("handled by the guard above"),
        }
    }
    out.trim().to_string()
}

/// Classifies an assistant message under the `<tool_call>` grammar.
pub fn parse_assistant_message(text: &str) -> ParsedTurn {
    let content = strip_reasoning(text);
    if content.is_empty() {
        return ParsedTurn::new(TurnKind::Empty, text, content);
    }
    let blocks = match split_blocks(&content) {
        Ok(blocks) => blocks,
        Err(detail) => {
            let mut turn = ParsedTurn::new(TurnKind::FormatError, text, content);
            turn.error_detail = Some(detail);
            return turn;
        }
    };
    if blocks.is_empty() {
        return ParsedTurn::new(TurnKind::FinalAnswer, text, content);
    }
    let mut calls = Vec::with_capacity(blocks.len());
    for (i, body) in blocks.iter().enumerate() {
        match parse_call(body) {
            Ok(call) => calls.push(call),
            Err(detail) => {
                let mut turn = ParsedTurn::new(TurnKind::FormatError, text, content);
                turn.error_detail = Some(format!("tool_call #{}: {detail}", i + 1));
                return turn;
            }
        }
    }
    let mut turn = ParsedTurn::new(TurnKind::ToolCalls, text, content);
    turn.calls = calls;
    turn
}

fn split_blocks(content: &str) -> Result<Vec<&str>, String> {
    let mut blocks = Vec::new();
    let mut rest = content;
    loop {
        let open = rest.find(CALL_OPEN);
        let close = rest.find(CALL_CLOSE);
        match (open, close) {
            (None, None) => return Ok(blocks),
            (None, Some(_)) => return Err("closing </tool_call> without an opening tag".into()),
            (Some(o), Some(c)) if c < o => {
                return Err("closing </tool_call> without an opening tag".into())
            }
            (Some(o), _) => {
                let inner = &rest[o + CALL_OPEN.len()..];
                let Some(c) = inner.find(CALL_CLOSE) else {
                    return Err("unterminated <tool_call>".into());
                };
                let body = &inner[..c];
                if body.contains(CALL_OPEN) {
                    return Err("nested <tool_call>".into());
                }
                blocks.push(body);
                rest = &inner[c + CALL_CLOSE.len()..];
            }
        }
    }
}

fn parse_call(body: &str) -> Result<ToolCall, String> {
    let value: Value = serde_json::from_str(body.trim()).map_err(|e| format!("invalid JSON: {e}"))?;
    let obj = value.as_object().ok_or("call is not a JSON object")?;
    let name = match obj.get("name") {
        Some(Value::String(s)) if !s.is_empty() => s.clone(),
        _ => return Err("missing string \"name\"".into()),
    };
    let arguments = match obj.get("arguments") {
        Some(Value::Object(m)) => m.clone(),
        _ => return Err("missing object \"arguments\"".into()),
    };
    Ok(ToolCall { name, arguments })
}
