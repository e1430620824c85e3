//! Domain types shared across the crate and the bundle file format.

mod document;
mod literal;
pub(crate) mod validate;

use std::collections::BTreeMap;
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

pub use document::{ParameterSpec, ToolDocument, ValueKind, ValueType};
pub use literal::Literal;
pub use validate::{
    check_binding, is_identifier, validate_bundle, validate_document, ValidationReport, Violation,
    ViolationCode,
};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ScenarioKind {
    SingleHop,
    ParallelSingleHop,
    MultiHop,
    ParallelMultiHop,
}

impl ScenarioKind {
    pub const ALL: [ScenarioKind; 4] = [
        ScenarioKind::SingleHop,
        ScenarioKind::ParallelSingleHop,
        ScenarioKind::MultiHop,
        ScenarioKind::ParallelMultiHop,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            ScenarioKind::SingleHop => "single_hop",
            ScenarioKind::ParallelSingleHop => "parallel_single_hop",
            ScenarioKind::MultiHop => "multi_hop",
            ScenarioKind::ParallelMultiHop => "parallel_multi_hop",
        }
    }
}

impl fmt::Display for ScenarioKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for ScenarioKind {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        ScenarioKind::ALL
            .into_iter()
            .find(|k| k.as_str() == s)
            .ok_or_else(|| format!("unknown scenario '{s}'"))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SubQuestion {
    pub id: String,
    pub text: String,
    pub answer: String,
    #[serde(default)]
    pub depends_on: Vec<String>,
    pub tool_name: String,
    pub canonical_bindings: BTreeMap<String, Literal>,
}

impl SubQuestion {
    /// Ids referenced by `{ref}` literals in the canonical bindings.
    pub fn referenced_ids(&self) -> Vec<&str> {
        let mut ids: Vec<&str> = self
            .canonical_bindings
            .values()
            .flat_map(Literal::refs)
            .collect();
        ids.sort_unstable();
        ids.dedup();
        ids
    }
}

/// One success row of a deployed tool: when the normalized call matches
/// `match_bindings` (after `{ref}` resolution) and every id in `depends_on`
/// is already solved, the tool answers `response_template`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SuccessRow {
    pub sub_question: String,
    #[serde(default)]
    pub depends_on: Vec<String>,
    pub answer: String,
    pub match_bindings: BTreeMap<String, Literal>,
    pub response_template: String,
}

impl SuccessRow {
    /// Templates are static text; rendering is the identity.
    pub fn render(&self) -> String {
        self.response_template.clone()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ToolBehavior {
    pub tool_name: String,
    pub success_table: Vec<SuccessRow>,
    pub fallback_error_templates: BTreeMap<ViolationCode, String>,
}

impl ToolBehavior {
    /// Standard error templates. `{param}` is replaced by the offending
    /// parameter name.
    pub fn default_error_templates() -> BTreeMap<ViolationCode, String> {
        BTreeMap::from([
            (
                ViolationCode::MissingRequired,
                "Error: missing required parameter '{param}'.".to_string(),
            ),
            (
                ViolationCode::UnknownParam,
                "Error: unexpected parameter '{param}'.".to_string(),
            ),
            (
                ViolationCode::TypeMismatch,
                "Error: parameter '{param}' has an invalid type.".to_string(),
            ),
            (
                ViolationCode::EnumViolation,
                "Error: parameter '{param}' is not one of the allowed values.".to_string(),
            ),
            (
                ViolationCode::NoMatch,
                "Error: no matching records found for the given arguments.".to_string(),
            ),
        ])
    }

    pub fn render_error(&self, code: ViolationCode, param: &str) -> String {
        match self.fallback_error_templates.get(&code) {
            Some(t) => t.replace("{param}", param),
            None => format!("Error: {code} ({param})."),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ToolEntry {
    pub document: ToolDocument,
    pub behavior: ToolBehavior,
}

/// A complete training environment: user input plus a locally interpreted
/// toolset.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EnvironmentBundle {
    pub id: String,
    pub scenario: ScenarioKind,
    pub question: String,
    pub final_answer: String,
    pub sub_questions: Vec<SubQuestion>,
    pub tools: Vec<ToolEntry>,
    pub distractors: Vec<String>,
    pub rng_seed: u64,
}

impl EnvironmentBundle {
    pub fn tool(&self, name: &str) -> Option<&ToolEntry> {
        self.tools.iter().find(|t| t.document.name == name)
    }

    pub fn sub_question(&self, id: &str) -> Option<&SubQuestion> {
        self.sub_questions.iter().find(|q| q.id == id)
    }

    pub fn documents(&self) -> Vec<ToolDocument> {
        self.tools.iter().map(|t| t.document.clone()).collect()
    }

    pub fn to_json_pretty(&self) -> String {
        serde_json::to_string_pretty(self).expect("bundle serializes")
    }

    pub fn from_json(text: &str) -> serde_json::Result<Self> {
        serde_json::from_str(text)
    }
}
