//! Tool behavior interpreter: argument validation, success-table matching
//! and response rendering.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};
use serde_json::{Map, Value};

use crate::model::validate::check_object;
use crate::model::{ToolBehavior, ToolDocument, ValidationReport, ViolationCode};
use crate::normalize::values_match;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ToolCall {
    pub name: String,
    pub arguments: Map<String, Value>,
}

impl ToolCall {
    pub fn new(name: impl Into<String>, arguments: Map<String, Value>) -> Self {
        ToolCall {
            name: name.into(),
            arguments,
        }
    }

    /// The `<tool_call>` body: `{"name": ..., "arguments": {...}}`.
    pub fn to_wire_json(&self) -> String {
        let mut m = Map::new();
        m.insert("name".into(), Value::String(self.name.clone()));
        m.insert("arguments".into(), Value::Object(self.arguments.clone()));
        Value::Object(m).to_string()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ResponseKind {
    Success,
    Error,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ToolResponse {
    pub kind: ResponseKind,
    pub payload: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub matched_subq: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub code: Option<ViolationCode>,
}

impl ToolResponse {
    pub fn success(payload: String, subq: String) -> Self {
        ToolResponse {
            kind: ResponseKind::Success,
            payload,
            matched_subq: Some(subq),
            code: None,
        }
    }

    pub fn error(code: ViolationCode, payload: String) -> Self {
        ToolResponse {
            kind: ResponseKind::Error,
            payload,
            matched_subq: None,
            code: Some(code),
        }
    }

    pub fn is_success(&self) -> bool {
        self.kind == ResponseKind::Success
    }
}

/// Result of [`validate_args`]: the violations plus the call with defaults
/// filled in for absent optional parameters.
#[derive(Debug, Clone, PartialEq)]
pub struct ArgCheck {
    pub report: ValidationReport,
    pub normalized: ToolCall,
}

pub fn validate_args(doc: &ToolDocument, call: &ToolCall) -> ArgCheck {
    let mut found = Vec::new();
    check_object(&doc.parameters, &call.arguments, "", &mut found);
    // unknown parameters are reported before anything else
    found.sort_by_key(|(code, _)| *code != ViolationCode::UnknownParam);

    let mut report = ValidationReport::default();
    for (code, path) in found {
        let message = format!("{code} on parameter '{path}'");
        report.push(code, path, message);
    }

    let mut arguments = call.arguments.clone();
    for p in &doc.parameters {
        if let (false, Some(default)) = (arguments.contains_key(&p.name), &p.default) {
            arguments.insert(p.name.clone(), default.clone());
        }
    }
    ArgCheck {
        report,
        normalized: ToolCall::new(call.name.clone(), arguments),
    }
}

/// Looks up answers of sub-questions that are already solved.
pub trait AnswerResolver {
    fn answer(&self, id: &str) -> Option<String>;
}

impl AnswerResolver for BTreeMap<String, String> {
    fn answer(&self, id: &str) -> Option<String> {
        self.get(id).cloned()
    }
}

impl<F> AnswerResolver for F
where
    F: Fn(&str) -> Option<String>,
{
    fn answer(&self, id: &str) -> Option<String> {
        self(id)
    }
}

/// Nothing solved yet.
pub struct NoAnswers;

impl AnswerResolver for NoAnswers {
    fn answer(&self, _: &str) -> Option<String> {
        None
    }
}

/// Invokes a deployed tool. Every outcome is returned in-band: argument
/// violations and unmatched calls come back as `Error` responses.
///
/// When several rows match, the one with the most bindings wins, ties going
/// to the earliest row.
pub fn invoke(
    behavior: &ToolBehavior,
    doc: &ToolDocument,
    call: &ToolCall,
    resolver: &dyn AnswerResolver,
) -> ToolResponse {
    let check = validate_args(doc, call);
    if let Some(v) = check.report.first() {
        return ToolResponse::error(v.code, behavior.render_error(v.code, &v.subject));
    }
    let args = &check.normalized.arguments;
    let lookup = |id: &str| resolver.answer(id);

    let mut best: Option<&crate::model::SuccessRow> = None;
    for row in &behavior.success_table {
        if !row.depends_on.iter().all(|d| resolver.answer(d).is_some()) {
            continue;
        }
        let matched = row.match_bindings.iter().all(|(name, literal)| {
            match (literal.resolve(&lookup), args.get(name)) {
                (Some(expected), Some(given)) => values_match(&expected, given),
                _ => false,
            }
        });
        if matched && best.is_none_or(|b| row.match_bindings.len() > b.match_bindings.len()) {
            best = Some(row);
        }
    }
    match best {
        Some(row) => ToolResponse::success(row.render(), row.sub_question.clone()),
        None => ToolResponse::error(
            ViolationCode::NoMatch,
            behavior.render_error(ViolationCode::NoMatch, ""),
        ),
    }
}
