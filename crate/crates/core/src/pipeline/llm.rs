//! Chat-completion driven backend. Every exchange can be recorded and
//! replayed so builds stay reproducible without the model.

use std::collections::{BTreeMap, VecDeque};
use std::fs;
use std::io::{BufRead, BufReader, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};
use serde_json::{json, Map, Value};

use super::prompts;
use super::{GeneratedDocs, GenerationBackend, MergeGroup, MergePlan, PipelineError, ScenarioSeed};
use crate::model::{check_binding, validate_document, Literal, ScenarioKind, SubQuestion, ToolDocument};

pub const MAX_ATTEMPTS: usize = 3;

pub trait ChatClient {
    fn complete(&mut self, prompt: &str) -> Result<String, String>;
}

impl<F: FnMut(&str) -> Result<String, String>> ChatClient for F {
    fn complete(&mut self, prompt: &str) -> Result<String, String> {
        self(prompt)
    }
}

/// OpenAI-style `/chat/completions` client.
pub struct HttpChatClient {
    base_url: String,
    api_key: String,
    model: String,
    http: reqwest::blocking::Client,
}

impl HttpChatClient {
    pub fn new(base_url: impl Into<String>, api_key: impl Into<String>, model: impl Into<String>) -> Self {
        HttpChatClient {
            base_url: base_url.into().trim_end_matches('/').to_string(),
            api_key: api_key.into(),
            model: model.into(),
            http: reqwest::blocking::Client::new(),
        }
    }

    /// Reads `GYM_LLM_BASE_URL`, `GYM_LLM_API_KEY` and `GYM_LLM_MODEL`.
    pub fn from_env() -> Result<Self, String> {
        let var = |k: &str| std::env::var(k).map_err(|_| format!("{k} is not set"));
        Ok(Self::new(var("GYM_LLM_BASE_URL")?, var("GYM_LLM_API_KEY")?, var("GYM_LLM_MODEL")?))
    }
}

impl ChatClient for HttpChatClient {
    fn complete(&mut self, prompt: &str) -> Result<String, String> {
        let body = json!({
            "model": self.model,
            "messages": [{"role": "user", "content": prompt}],
            "temperature": 0,
            "max_tokens": 2048,
        });
        let resp = self
            .http
            .post(format!("{}/chat/completions", self.base_url))
            .bearer_auth(&self.api_key)
            .json(&body)
            .send()
            .map_err(|e| e.to_string())?;
        let status = resp.status();
        let value: Value = resp.json().map_err(|e| e.to_string())?;
        if !status.is_success() {
            return Err(format!("HTTP {status}: {value}"));
        }
        value["choices"][0]["message"]["content"]
            .as_str()
            .map(str::to_string)
            .ok_or_else(|| format!("no message content in {value}"))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ChatExchange {
    pub prompt: String,
    pub response: String,
}

/// Wraps a client and keeps every successful exchange.
pub struct RecordingClient<C> {
    inner: C,
    pub log: Vec<ChatExchange>,
}

impl<C: ChatClient> RecordingClient<C> {
    pub fn new(inner: C) -> Self {
        RecordingClient { inner, log: Vec::new() }
    }

    pub fn write_jsonl(&self, path: impl AsRef<Path>) -> std::io::Result<()> {
        let mut f = fs::File::create(path)?;
        for ex in &self.log {
            writeln!(f, "{}", serde_json::to_string(ex).expect("exchange serializes"))?;
        }
        f.sync_all()
    }
}

impl<C: ChatClient> ChatClient for RecordingClient<C> {
    fn complete(&mut self, prompt: &str) -> Result<String, String> {
        let response = self.inner.complete(prompt)?;
        self.log.push(ChatExchange {
            prompt: prompt.to_string(),
            response: response.clone(),
        });
        Ok(response)
    }
}

/// Serves recorded exchanges in order and refuses diverging prompts.
pub struct ReplayClient {
    queue: VecDeque<ChatExchange>,
}

impl ReplayClient {
    pub fn new(exchanges: Vec<ChatExchange>) -> Self {
        ReplayClient { queue: exchanges.into() }
    }

    pub fn from_jsonl(path: impl AsRef<Path>) -> std::io::Result<Self> {
        let reader = BufReader::new(fs::File::open(path)?);
        let mut exchanges = Vec::new();
        for line in reader.lines() {
            let line = line?;
            if line.trim().is_empty() {
                continue;
            }
            exchanges.push(
                serde_json::from_str(&line).map_err(|e| std::io::Error::new(std::io::ErrorKind::InvalidData, e))?,
            );
        }
        Ok(Self::new(exchanges))
    }

    pub fn remaining(&self) -> usize {
        self.queue.len()
    }
}

impl ChatClient for ReplayClient {
    fn complete(&mut self, prompt: &str) -> Result<String, String> {
        match self.queue.pop_front() {
            Some(ex) if ex.prompt == prompt => Ok(ex.response),
            Some(_) => Err("prompt differs from the recorded exchange".into()),
            None => Err("recording exhausted".into()),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ManualSubQuestion {
    pub id: String,
    pub text: String,
    pub answer: String,
    #[serde(default)]
    pub depends_on: Vec<String>,
}

/// Hand-written stage-one input: the decomposed question with answers.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ManualInput {
    pub scenario: ScenarioKind,
    pub question: String,
    pub answer: String,
    pub sub_questions: Vec<ManualSubQuestion>,
}

impl ManualInput {
    /// The seed this input satisfies.
    pub fn seed(&self, rng_seed: u64) -> ScenarioSeed {
        ScenarioSeed::new(self.scenario, self.sub_questions.len(), rng_seed)
    }
}

pub struct LlmBackend<C> {
    client: C,
    input: ManualInput,
}

impl<C: ChatClient> LlmBackend<C> {
    pub fn new(client: C, input: ManualInput) -> Self {
        LlmBackend { client, input }
    }

    pub fn into_client(self) -> C {
        self.client
    }

    fn ask<T>(&mut self, prompt: &str, parse: impl Fn(&str) -> Result<T, String>) -> Result<T, PipelineError> {
        let mut last = (String::new(), String::new());
        for attempt in 1..=MAX_ATTEMPTS {
            match self.client.complete(prompt) {
                Ok(raw) => match parse(&raw) {
                    Ok(v) => return Ok(v),
                    Err(e) => {
                        log::warn!("attempt {attempt}: unusable model output: {e}");
                        last = (e, raw);
                    }
                },
                Err(e) => {
                    log::warn!("attempt {attempt}: chat request failed: {e}");
                    last = (e, String::new());
                }
            }
        }
        Err(PipelineError::BackendFailure {
            message: format!("{} attempts failed: {}", MAX_ATTEMPTS, last.0),
            raw: last.1,
        })
    }
}

fn render(template: &str, vars: &[(&str, &str)]) -> Result<String, PipelineError> {
    prompts::render(template, vars).map_err(|e| PipelineError::BackendFailure {
        message: format!("prompt template: {e}"),
        raw: String::new(),
    })
}

/// Extracts the JSON object from a model reply, tolerating code fences and
/// surrounding prose.
pub fn extract_json(raw: &str) -> Result<Map<String, Value>, String> {
    let start = raw.find('{').ok_or("no JSON object in output")?;
    let end = raw.rfind('}').ok_or("no JSON object in output")?;
    if end < start {
        return Err("no JSON object in output".into());
    }
    match serde_json::from_str(&raw[start..=end]) {
        Ok(Value::Object(m)) => Ok(m),
        Ok(_) => Err("output is not a JSON object".into()),
        Err(e) => Err(format!("invalid JSON: {e}")),
    }
}

fn parse_document(v: &Value) -> Result<ToolDocument, String> {
    let doc = ToolDocument::from_schema_json(v)?;
    let report = validate_document(&doc);
    if report.is_empty() {
        Ok(doc)
    } else {
        Err(format!("invalid tool document: {report}"))
    }
}

/// Python-flavoured signature shown to the verifier in place of code.
fn signature(doc: &ToolDocument) -> String {
    let py_type = |p: &crate::model::ParameterSpec| match p.kind() {
        crate::model::ValueKind::String => "str",
        crate::model::ValueKind::Number => "float",
        crate::model::ValueKind::Integer => "int",
        crate::model::ValueKind::Boolean => "bool",
        crate::model::ValueKind::Array => "list",
        crate::model::ValueKind::Object => "dict",
    };
    let mut params: Vec<String> = Vec::new();
    for p in doc.parameters.iter().filter(|p| p.required) {
        params.push(format!("{}: {}", p.name, py_type(p)));
    }
    for p in doc.parameters.iter().filter(|p| !p.required) {
        let default = match &p.default {
            Some(Value::Bool(true)) => "True".to_string(),
            Some(Value::Bool(false)) => "False".to_string(),
            Some(v) => v.to_string(),
            None => "None".to_string(),
        };
        params.push(format!("{}: {} = {default}", p.name, py_type(p)));
    }
    format!(
        "def {}({}):\n    \"\"\"{}\"\"\"",
        doc.name,
        params.join(", "),
        doc.description
    )
}

/// Parses `name(key=value, ...)` with Python literal values.
pub fn parse_python_call(src: &str) -> Result<(String, Map<String, Value>), String> {
    let mut p = PyParser { s: src.trim().as_bytes(), i: 0, src: src.trim() };
    let name = p.ident()?;
    p.expect(b'(')?;
    let mut args = Map::new();
    loop {
        p.ws();
        if p.eat(b')') {
            break;
        }
        let key = p.ident()?;
        p.ws();
        p.expect(b'=').map_err(|_| format!("positional argument near '{key}'"))?;
        let value = p.value()?;
        if args.insert(key.clone(), value).is_some() {
            return Err(format!("argument '{key}' given twice"));
        }
        p.ws();
        if p.eat(b',') {
            continue;
        }
        p.ws();
        p.expect(b')')?;
        break;
    }
    p.ws();
    if p.i != p.s.len() {
        return Err("trailing text after call".into());
    }
    Ok((name, args))
}

struct PyParser<'a> {
    s: &'a [u8],
    i: usize,
    src: &'a str,
}

impl PyParser<'_> {
    fn ws(&mut self) {
        while self.i < self.s.len() && self.s[self.i].is_ascii_whitespace() {
            self.i += 1;
        }
    }

    fn eat(&mut self, b: u8) -> bool {
        if self.s.get(self.i) == Some(&b) {
            self.i += 1;
            true
        } else {
            false
        }
    }

    fn expect(&mut self, b: u8) -> Result<(), String> {
        self.ws();
        if self.eat(b) {
            Ok(())
        } else {
            Err(format!("expected '{}' at offset {}", b as char, self.i))
        }
    }

    fn ident(&mut self) -> Result<String, String> {
        self.ws();
        let start = self.i;
        while self.i < self.s.len() && (self.s[self.i].is_ascii_alphanumeric() || self.s[self.i] == b'_' || self.s[self.i] == b'.') {
            self.i += 1;
        }
        if start == self.i {
            return Err(format!("expected identifier at offset {start}"));
        }
        Ok(self.src[start..self.i].to_string())
    }

    fn value(&mut self) -> Result<Value, String> {
        self.ws();
        match self.s.get(self.i) {
            Some(b'"') | Some(b'\'') => self.string().map(Value::String),
            Some(b'[') => {
                self.i += 1;
                let mut items = Vec::new();
                loop {
                    self.ws();
                    if self.eat(b']') {
                        break;
                    }
                    items.push(self.value()?);
                    self.ws();
                    if !self.eat(b',') {
                        self.expect(b']')?;
                        break;
                    }
                }
                Ok(Value::Array(items))
            }
            Some(b'{') => {
                self.i += 1;
                let mut map = Map::new();
                loop {
                    self.ws();
                    if self.eat(b'}') {
                        break;
                    }
                    let key = match self.value()? {
                        Value::String(k) => k,
                        other => return Err(format!("dict key {other} is not a string")),
                    };
                    self.expect(b':')?;
                    map.insert(key, self.value()?);
                    self.ws();
                    if !self.eat(b',') {
                        self.expect(b'}')?;
                        break;
                    }
                }
                Ok(Value::Object(map))
            }
            Some(_) => {
                let start = self.i;
                while self.i < self.s.len() && !matches!(self.s[self.i], b',' | b')' | b']' | b'}') && !self.s[self.i].is_ascii_whitespace() {
                    self.i += 1;
                }
                let word = &self.src[start..self.i];
                match word {
                    "True" => Ok(Value::Bool(true)),
                    "False" => Ok(Value::Bool(false)),
                    "None" => Err("None is not a supported argument value".into()),
                    _ => serde_json::from_str::<serde_json::Number>(word)
                        .map(Value::Number)
                        .map_err(|_| format!("unrecognised value '{word}'")),
                }
            }
            None => Err("unexpected end of call".into()),
        }
    }

    fn string(&mut self) -> Result<String, String> {
        let quote = self.s[self.i];
        self.i += 1;
        let mut out = String::new();
        let rest = &self.src[self.i..];
        let mut chars = rest.char_indices();
        while let Some((off, c)) = chars.next() {
            if c as u32 == quote as u32 {
                self.i += off + 1;
                return Ok(out);
            }
            if c == '\\' {
                match chars.next() {
                    Some((_, 'n')) => out.push('\n'),
                    Some((_, 't')) => out.push('\t'),
                    Some((_, e)) => out.push(e),
                    None => break,
                }
            } else {
                out.push(c);
            }
        }
        Err("unterminated string literal".into())
    }
}

/// Turns verifier call arguments into canonical bindings. String values
/// equal to a dependency's answer become references to it.
fn bindings_from_call(
    doc: &ToolDocument,
    args: Map<String, Value>,
    deps: &[(&str, &str)],
) -> Result<BTreeMap<String, Literal>, String> {
    let mut out = BTreeMap::new();
    for (name, value) in args {
        let spec = doc
            .parameter(&name)
            .ok_or_else(|| format!("call uses undeclared parameter '{name}'"))?;
        let literal = to_literal(&value, deps)?;
        check_binding(spec, &literal).map_err(|e| format!("{name}: {e}"))?;
        out.insert(name, literal);
    }
    if let Some(missing) = doc.required_names().into_iter().find(|r| !out.contains_key(*r)) {
        return Err(format!("call omits required parameter '{missing}'"));
    }
    if out.is_empty() {
        return Err("call binds no parameters".into());
    }
    Ok(out)
}

fn to_literal(value: &Value, deps: &[(&str, &str)]) -> Result<Literal, String> {
    Ok(match value {
        Value::String(s) => match deps.iter().find(|(_, answer)| answer == s) {
            Some((id, _)) => Literal::reference(*id),
            None => Literal::string(s.clone()),
        },
        Value::Array(items) => Literal::List(items.iter().map(|v| to_literal(v, deps)).collect::<Result<_, _>>()?),
        Value::Object(map) => Literal::Map(
            map.iter()
                .map(|(k, v)| Ok((k.clone(), to_literal(v, deps)?)))
                .collect::<Result<_, String>>()?,
        ),
        other => Literal::from_value(other)?,
    })
}

fn parse_plan(raw: &str, n: usize) -> Result<MergePlan, String> {
    let obj = extract_json(raw)?;
    let mut plan = MergePlan::default();
    match obj.get("merged") {
        None => return Err("missing 'merged' field".into()),
        Some(Value::Null) => {}
        Some(Value::Array(groups)) => {
            for g in groups {
                let ids = g["id"]
                    .as_array()
                    .ok_or("group without an 'id' list")?
                    .iter()
                    .map(|v| match v.as_u64() {
                        Some(k) if k >= 1 => Ok(k as usize - 1),
                        _ => Err(format!("bad tool number {v}")),
                    })
                    .collect::<Result<Vec<_>, _>>()?;
                let merged = parse_document(&g["document"])?;
                plan.groups.push(MergeGroup { ids, merged });
            }
        }
        Some(other) => return Err(format!("'merged' must be null or a list, got {other}")),
    }
    let grouped: Vec<usize> = plan.groups.iter().flat_map(|g| g.ids.clone()).collect();
    plan.untouched = (0..n).filter(|i| !grouped.contains(i)).collect();
    plan.check(n)?;
    Ok(plan)
}

impl<C: ChatClient> GenerationBackend for LlmBackend<C> {
    fn generate_documents(&mut self, seed: &ScenarioSeed) -> Result<GeneratedDocs, PipelineError> {
        if seed.scenario != self.input.scenario || seed.n_subq != self.input.sub_questions.len() {
            return Err(PipelineError::InvalidSeed(format!(
                "seed {}x{} does not describe the manual input ({}x{})",
                seed.scenario,
                seed.n_subq,
                self.input.scenario,
                self.input.sub_questions.len()
            )));
        }
        let input = self.input.clone();
        let mut sub_questions = Vec::new();
        let mut documents = Vec::new();
        for sq in &input.sub_questions {
            let prompt = render(prompts::DOCUMENT_GENERATION, &[("question", &sq.text)])?;
            let doc = self.ask(&prompt, |raw| {
                let obj = extract_json(raw)?;
                parse_document(obj.get("tool").ok_or("missing 'tool' field")?)
            })?;

            let deps: Vec<(&str, &str)> = sq
                .depends_on
                .iter()
                .filter_map(|d| input.sub_questions.iter().find(|o| &o.id == d))
                .map(|o| (o.id.as_str(), o.answer.as_str()))
                .collect();
            let code = signature(&doc);
            let prompt = render(prompts::CODE_VERIFY, &[("question", &sq.text), ("code", &code)])?;
            let bindings = self.ask(&prompt, |raw| {
                let obj = extract_json(raw)?;
                let call = obj
                    .get("call")
                    .and_then(Value::as_str)
                    .ok_or("verifier returned no call")?;
                let (name, args) = parse_python_call(call)?;
                if name != doc.name {
                    return Err(format!("verifier called '{name}', expected '{}'", doc.name));
                }
                bindings_from_call(&doc, args, &deps)
            })?;

            sub_questions.push(SubQuestion {
                id: sq.id.clone(),
                text: sq.text.clone(),
                answer: sq.answer.clone(),
                depends_on: sq.depends_on.clone(),
                tool_name: doc.name.clone(),
                canonical_bindings: bindings,
            });
            documents.push(doc);
        }
        Ok(GeneratedDocs {
            question: input.question,
            final_answer: input.answer,
            sub_questions,
            documents,
        })
    }

    fn integrate(&mut self, docs: &[ToolDocument]) -> Result<MergePlan, PipelineError> {
        let listing: Vec<String> = docs
            .iter()
            .enumerate()
            .map(|(i, d)| {
                format!(
                    "Tool {}:\n{}",
                    i + 1,
                    serde_json::to_string_pretty(&d.to_schema_json()).expect("schema serializes")
                )
            })
            .collect();
        let prompt = render(prompts::FUNCTION_INTEGRATION, &[("documents", &listing.join("\n\n"))])?;
        let n = docs.len();
        self.ask(&prompt, |raw| parse_plan(raw, n))
    }

    fn generalize(&mut self, doc: &ToolDocument) -> Result<Option<ToolDocument>, PipelineError> {
        let tool = serde_json::to_string_pretty(&doc.to_schema_json()).expect("schema serializes");
        let prompt = render(prompts::COMPLEXITY_SCALING, &[("tool", &tool)])?;
        self.ask(&prompt, |raw| {
            let obj = extract_json(raw)?;
            parse_document(obj.get("refined_version").ok_or("missing 'refined_version' field")?)
        })
        .map(Some)
    }
}
