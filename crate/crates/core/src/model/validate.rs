use std::collections::{BTreeMap, BTreeSet};
use std::fmt;

use serde::{Deserialize, Serialize};
use serde_json::Value;

use super::{EnvironmentBundle, Literal, ParameterSpec, ToolDocument, ValueKind};
use crate::graph::DependencyGraph;
use crate::normalize::{contains_answer, values_match};

/// Machine-readable violation codes for documents, bundles and tool calls.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "SCREAMING_SNAKE_CASE")]
pub enum ViolationCode {
    // documents
    BadName,
    DupParam,
    BadDefault,
    BadEnum,
    MissingSubspec,
    UnexpectedSubspec,
    // bundles
    EmptyBundle,
    DupTool,
    DupSubq,
    EmptyAnswer,
    SelfDep,
    DupDep,
    UnknownDep,
    UndeclaredRef,
    UnresolvedTool,
    Cycle,
    ScenarioMismatch,
    UnknownDistractor,
    DistractorMapped,
    DistractorLeak,
    BehaviorMismatch,
    TemplateMissingAnswer,
    MissingRow,
    BindingTypeMismatch,
    // tool calls
    MissingRequired,
    UnknownParam,
    TypeMismatch,
    EnumViolation,
    NoMatch,
    UnknownTool,
    CallLimit,
}

impl ViolationCode {
    pub fn as_str(self) -> &'static str {
        use ViolationCode::*;
        match self {
            BadName => "BAD_NAME",
            DupParam => "DUP_PARAM",
            BadDefault => "BAD_DEFAULT",
            BadEnum => "BAD_ENUM",
            MissingSubspec => "MISSING_SUBSPEC",
            UnexpectedSubspec => "UNEXPECTED_SUBSPEC",
            EmptyBundle => "EMPTY_BUNDLE",
            DupTool => "DUP_TOOL",
            DupSubq => "DUP_SUBQ",
            EmptyAnswer => "EMPTY_ANSWER",
            SelfDep => "SELF_DEP",
            DupDep => "DUP_DEP",
            UnknownDep => "UNKNOWN_DEP",
            UndeclaredRef => "UNDECLARED_REF",
            UnresolvedTool => "UNRESOLVED_TOOL",
            Cycle => "CYCLE",
            ScenarioMismatch => "SCENARIO_MISMATCH",
            UnknownDistractor => "UNKNOWN_DISTRACTOR",
            DistractorMapped => "DISTRACTOR_MAPPED",
            DistractorLeak => "DISTRACTOR_LEAK",
            BehaviorMismatch => "BEHAVIOR_MISMATCH",
            TemplateMissingAnswer => "TEMPLATE_MISSING_ANSWER",
            MissingRow => "MISSING_ROW",
            BindingTypeMismatch => "BINDING_TYPE_MISMATCH",
            MissingRequired => "MISSING_REQUIRED",
            UnknownParam => "UNKNOWN_PARAM",
            TypeMismatch => "TYPE_MISMATCH",
            EnumViolation => "ENUM_VIOLATION",
            NoMatch => "NO_MATCH",
            UnknownTool => "UNKNOWN_TOOL",
            CallLimit => "CALL_LIMIT",
        }
    }
}

impl fmt::Display for ViolationCode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Violation {
    pub code: ViolationCode,
    /// The offending parameter, tool, or sub-question.
    pub subject: String,
    pub message: String,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct ValidationReport {
    pub violations: Vec<Violation>,
}

impl ValidationReport {
    pub fn is_empty(&self) -> bool {
        self.violations.is_empty()
    }

    pub fn has(&self, code: ViolationCode) -> bool {
        self.violations.iter().any(|v| v.code == code)
    }

    pub fn first(&self) -> Option<&Violation> {
        self.violations.first()
    }

    pub fn push(&mut self, code: ViolationCode, subject: impl Into<String>, message: impl Into<String>) {
        self.violations.push(Violation {
            code,
            subject: subject.into(),
            message: message.into(),
        });
    }
}

impl fmt::Display for ValidationReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for v in &self.violations {
            writeln!(f, "{} [{}]: {}", v.code, v.subject, v.message)?;
        }
        Ok(())
    }
}

/// `[a-z][a-z0-9_]{0,63}`
pub fn is_identifier(name: &str) -> bool {
    let bytes = name.as_bytes();
    !bytes.is_empty()
        && bytes.len() <= 64
        && bytes[0].is_ascii_lowercase()
        && bytes
            .iter()
            .all(|b| b.is_ascii_lowercase() || b.is_ascii_digit() || *b == b'_')
}

pub fn validate_document(doc: &ToolDocument) -> ValidationReport {
    let mut report = ValidationReport::default();
    if !is_identifier(&doc.name) {
        report.push(
            ViolationCode::BadName,
            &doc.name,
            format!("tool name '{}' is not a lowercase identifier", doc.name),
        );
    }
    check_param_list(&doc.parameters, "", &mut report);
    report
}

fn check_param_list(params: &[ParameterSpec], prefix: &str, report: &mut ValidationReport) {
    let mut seen = BTreeSet::new();
    for p in params {
        let path = format!("{prefix}{}", p.name);
        if !is_identifier(&p.name) {
            report.push(
                ViolationCode::BadName,
                &path,
                format!("parameter name '{}' is not a lowercase identifier", p.name),
            );
        }
        if !seen.insert(p.name.as_str()) {
            report.push(ViolationCode::DupParam, &path, "duplicate parameter name");
        }
        check_spec(p, &path, report);
    }
}

fn check_spec(p: &ParameterSpec, path: &str, report: &mut ValidationReport) {
    let vt = &p.value_type;
    match vt.kind {
        ValueKind::Array => {
            if vt.properties.is_some() {
                report.push(ViolationCode::UnexpectedSubspec, path, "array carries properties");
            }
            match &vt.items {
                Some(items) => check_spec(items, &format!("{path}[]"), report),
                None => report.push(ViolationCode::MissingSubspec, path, "array without items spec"),
            }
        }
        ValueKind::Object => {
            if vt.items.is_some() {
                report.push(ViolationCode::UnexpectedSubspec, path, "object carries items");
            }
            match &vt.properties {
                Some(props) => check_param_list(props, &format!("{path}."), report),
                None => report.push(
                    ViolationCode::MissingSubspec,
                    path,
                    "object without properties spec",
                ),
            }
        }
        _ => {
            if vt.items.is_some() || vt.properties.is_some() {
                report.push(
                    ViolationCode::UnexpectedSubspec,
                    path,
                    format!("scalar type {} carries a sub-spec", vt.kind),
                );
            }
        }
    }
    if let Some(values) = &p.enum_values {
        if values.is_empty() {
            report.push(ViolationCode::BadEnum, path, "empty enum list");
        }
        if let Some(bad) = values.iter().find(|v| !vt.kind.admits(v)) {
            report.push(
                ViolationCode::BadEnum,
                path,
                format!("enum value {bad} is not of type {}", vt.kind),
            );
        }
    }
    if let Some(default) = &p.default {
        let mut inner = Vec::new();
        check_value(p, default, path, &mut inner);
        if let Some((code, _)) = inner.first() {
            report.push(
                ViolationCode::BadDefault,
                path,
                format!("default {default} fails its own spec ({code})"),
            );
        }
    }
}

/// Deep check of a JSON value against a parameter spec. Appends
/// `(code, path)` pairs for every type, enum, missing or unknown problem.
pub(crate) fn check_value(
    spec: &ParameterSpec,
    value: &Value,
    path: &str,
    out: &mut Vec<(ViolationCode, String)>,
) {
    let vt = &spec.value_type;
    if !vt.kind.admits(value) {
        out.push((ViolationCode::TypeMismatch, path.to_string()));
        return;
    }
    if let Some(values) = &spec.enum_values {
        if !values.iter().any(|allowed| values_match(allowed, value)) {
            out.push((ViolationCode::EnumViolation, path.to_string()));
            return;
        }
    }
    match (value, &vt.items, &vt.properties) {
        (Value::Array(items), Some(item_spec), _) => {
            for (i, item) in items.iter().enumerate() {
                check_value(item_spec, item, &format!("{path}[{i}]"), out);
            }
        }
        (Value::Object(map), _, Some(props)) => check_object(props, map, path, out),
        _ => {}
    }
}

pub(crate) fn check_object(
    props: &[ParameterSpec],
    map: &serde_json::Map<String, Value>,
    path: &str,
    out: &mut Vec<(ViolationCode, String)>,
) {
    let join = |name: &str| {
        if path.is_empty() {
            name.to_string()
        } else {
            format!("{path}.{name}")
        }
    };
    for key in map.keys() {
        if !props.iter().any(|p| &p.name == key) {
            out.push((ViolationCode::UnknownParam, join(key)));
        }
    }
    for p in props {
        match map.get(&p.name) {
            Some(v) => check_value(p, v, &join(&p.name), out),
            None if p.required => out.push((ViolationCode::MissingRequired, join(&p.name))),
            None => {}
        }
    }
}

/// Static type check of a canonical binding literal. `{ref}` literals stand
/// for answer strings; their enum membership cannot be checked statically.
pub fn check_binding(spec: &ParameterSpec, literal: &Literal) -> Result<(), String> {
    let kind = spec.value_type.kind;
    match literal {
        Literal::Ref(id) => {
            if kind == ValueKind::String {
                Ok(())
            } else {
                Err(format!("reference to '{id}' bound to a {kind} slot"))
            }
        }
        Literal::List(items) => {
            let item_spec = match (&spec.value_type.items, kind) {
                (Some(s), ValueKind::Array) => s,
                _ => return Err(format!("list bound to a {kind} slot")),
            };
            items.iter().try_for_each(|l| check_binding(item_spec, l))
        }
        Literal::Map(map) => {
            let props = match (&spec.value_type.properties, kind) {
                (Some(p), ValueKind::Object) => p,
                _ => return Err(format!("map bound to a {kind} slot")),
            };
            for key in map.keys() {
                if !props.iter().any(|p| &p.name == key) {
                    return Err(format!("map key '{key}' is not a declared property"));
                }
            }
            for p in props {
                match map.get(&p.name) {
                    Some(l) => check_binding(p, l)?,
                    None if p.required => {
                        return Err(format!("required property '{}' is unbound", p.name))
                    }
                    None => {}
                }
            }
            Ok(())
        }
        scalar => {
            let mut out = Vec::new();
            check_value(spec, &scalar.to_value(), &spec.name, &mut out);
            match out.first() {
                None => Ok(()),
                Some((code, _)) => Err(format!("{code} for literal {}", scalar.to_value())),
            }
        }
    }
}

/// Checks every bundle invariant: tool resolution, binding types, behavior
/// tables, DAG acyclicity, scenario consistency and the distractor scan.
pub fn validate_bundle(env: &EnvironmentBundle) -> ValidationReport {
    let mut report = ValidationReport::default();
    if env.sub_questions.is_empty() {
        report.push(ViolationCode::EmptyBundle, &env.id, "bundle has no sub-questions");
    }

    let mut tool_counts: BTreeMap<&str, usize> = BTreeMap::new();
    for entry in &env.tools {
        *tool_counts.entry(entry.document.name.as_str()).or_default() += 1;
        for v in validate_document(&entry.document).violations {
            report.push(
                v.code,
                format!("{}.{}", entry.document.name, v.subject),
                v.message,
            );
        }
        if entry.behavior.tool_name != entry.document.name {
            report.push(
                ViolationCode::BehaviorMismatch,
                &entry.document.name,
                format!("behavior is deployed for '{}'", entry.behavior.tool_name),
            );
        }
        for row in &entry.behavior.success_table {
            for key in row.match_bindings.keys() {
                if entry.document.parameter(key).is_none() {
                    report.push(
                        ViolationCode::BehaviorMismatch,
                        format!("{}.{key}", entry.document.name),
                        "match binding references an undeclared parameter",
                    );
                }
            }
            if !row.render().contains(&row.answer) {
                report.push(
                    ViolationCode::TemplateMissingAnswer,
                    &row.sub_question,
                    "rendered response does not contain the answer",
                );
            }
            match env.sub_question(&row.sub_question) {
                Some(q) if q.answer == row.answer => {}
                _ => report.push(
                    ViolationCode::BehaviorMismatch,
                    &row.sub_question,
                    "success row does not correspond to a sub-question answer",
                ),
            }
        }
    }
    for (name, count) in &tool_counts {
        if *count > 1 {
            report.push(ViolationCode::DupTool, *name, format!("{count} documents share this name"));
        }
    }

    let ids: BTreeSet<&str> = env.sub_questions.iter().map(|q| q.id.as_str()).collect();
    let mut seen = BTreeSet::new();
    for q in &env.sub_questions {
        if !seen.insert(q.id.as_str()) {
            report.push(ViolationCode::DupSubq, &q.id, "duplicate sub-question id");
        }
        if q.answer.trim().is_empty() {
            report.push(ViolationCode::EmptyAnswer, &q.id, "empty answer");
        }
        let mut deps = BTreeSet::new();
        for d in &q.depends_on {
            if d == &q.id {
                report.push(ViolationCode::SelfDep, &q.id, "sub-question depends on itself");
            } else if !ids.contains(d.as_str()) {
                report.push(ViolationCode::UnknownDep, &q.id, format!("unknown dependency '{d}'"));
            }
            if !deps.insert(d.as_str()) {
                report.push(ViolationCode::DupDep, &q.id, format!("dependency '{d}' listed twice"));
            }
        }
        for r in q.referenced_ids() {
            if !deps.contains(r) {
                report.push(
                    ViolationCode::UndeclaredRef,
                    &q.id,
                    format!("binding references '{r}' outside depends_on"),
                );
            }
        }
        if env.distractors.contains(&q.tool_name) {
            report.push(
                ViolationCode::DistractorMapped,
                &q.id,
                format!("sub-question is mapped to distractor '{}'", q.tool_name),
            );
        }
        match tool_counts.get(q.tool_name.as_str()) {
            Some(1) => {}
            _ => {
                report.push(
                    ViolationCode::UnresolvedTool,
                    &q.id,
                    format!("tool '{}' does not resolve to exactly one document", q.tool_name),
                );
                continue;
            }
        }
        let entry = env.tool(&q.tool_name).expect("counted above");
        for (name, literal) in &q.canonical_bindings {
            match entry.document.parameter(name) {
                Some(spec) => {
                    if let Err(why) = check_binding(spec, literal) {
                        report.push(ViolationCode::BindingTypeMismatch, format!("{}.{name}", q.id), why);
                    }
                }
                None => report.push(
                    ViolationCode::BindingTypeMismatch,
                    format!("{}.{name}", q.id),
                    "binding names an undeclared parameter",
                ),
            }
        }
        for required in entry.document.required_names() {
            if !q.canonical_bindings.contains_key(required) {
                report.push(
                    ViolationCode::MissingRequired,
                    format!("{}.{required}", q.id),
                    "canonical call leaves a required parameter unbound",
                );
            }
        }
        if !entry
            .behavior
            .success_table
            .iter()
            .any(|row| row.sub_question == q.id)
        {
            report.push(ViolationCode::MissingRow, &q.id, "no success row serves this sub-question");
        }
    }

    if !env.sub_questions.is_empty() {
        let graph = DependencyGraph::from_sub_questions(&env.sub_questions);
        if !graph.is_acyclic() {
            report.push(ViolationCode::Cycle, &env.id, "dependency graph has a cycle");
        } else if let Ok(kind) = graph.classify() {
            if kind != env.scenario {
                report.push(
                    ViolationCode::ScenarioMismatch,
                    &env.id,
                    format!("stored scenario {} but the graph classifies as {kind}", env.scenario),
                );
            }
        }
    }

    for name in &env.distractors {
        let Some(entry) = env.tool(name) else {
            report.push(ViolationCode::UnknownDistractor, name, "distractor is not in the toolset");
            continue;
        };
        if !entry.behavior.success_table.is_empty() {
            report.push(ViolationCode::DistractorMapped, name, "distractor has success rows");
        }
        for text in distractor_texts(entry) {
            for q in &env.sub_questions {
                if !q.answer.trim().is_empty() && contains_answer(&text, &q.answer) {
                    report.push(
                        ViolationCode::DistractorLeak,
                        name,
                        format!("a distractor response contains the answer of {}", q.id),
                    );
                }
            }
        }
    }
    report
}

/// Every string a distractor can emit: success templates and each error
/// template rendered with each declared parameter name.
fn distractor_texts(entry: &super::ToolEntry) -> Vec<String> {
    let behavior = &entry.behavior;
    let mut texts: Vec<String> = behavior.success_table.iter().map(|r| r.render()).collect();
    let mut names: Vec<&str> = entry.document.parameters.iter().map(|p| p.name.as_str()).collect();
    names.push("");
    for code in behavior.fallback_error_templates.keys() {
        for n in &names {
            texts.push(behavior.render_error(*code, n));
        }
    }
    texts
}
