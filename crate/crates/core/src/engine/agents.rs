use std::collections::{BTreeMap, BTreeSet, VecDeque};
use std::fmt;
use std::str::FromStr;

use serde_json::Map;

use super::{Budgets, Message};
use crate::graph::DependencyGraph;
use crate::model::{EnvironmentBundle, SubQuestion};
use crate::runtime::ToolCall;

pub type AgentError = Box<dyn std::error::Error + Send + Sync>;

/// Produces the next assistant message from the transcript so far.
pub trait Agent {
    fn act(&mut self, transcript: &[Message]) -> Result<String, AgentError>;
}

impl<F> Agent for F
where
    F: FnMut(&[Message]) -> Result<String, AgentError>,
{
    fn act(&mut self, transcript: &[Message]) -> Result<String, AgentError> {
        self(transcript)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum AgentKind {
    /// Solves canonical calls in dependency order, then answers.
    Oracle,
    /// Always replies with an empty message.
    Silent,
    /// Like the oracle, but issues every call twice.
    Spammer,
    /// Answers with the gold answer without calling any tool.
    Guesser,
}

impl AgentKind {
    pub const ALL: [AgentKind; 4] = [AgentKind::Oracle, AgentKind::Silent, AgentKind::Spammer, AgentKind::Guesser];

    pub fn as_str(self) -> &'static str {
        match self {
            AgentKind::Oracle => "oracle",
            AgentKind::Silent => "silent",
            AgentKind::Spammer => "spammer",
            AgentKind::Guesser => "guesser",
        }
    }
}

impl fmt::Display for AgentKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for AgentKind {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        AgentKind::ALL
            .into_iter()
            .find(|k| k.as_str() == s)
            .ok_or_else(|| format!("unknown agent '{s}' (expected oracle, silent, spammer or guesser)"))
    }
}

/// The canonical call of a sub-question with `{ref}` bindings resolved
/// against `answers`. `None` while a referenced answer is unknown.
pub fn canonical_call(q: &SubQuestion, answers: &BTreeMap<String, String>) -> Option<ToolCall> {
    let lookup = |id: &str| answers.get(id).cloned();
    let arguments = q
        .canonical_bindings
        .iter()
        .map(|(k, lit)| Some((k.clone(), lit.resolve(&lookup)?)))
        .collect::<Option<Map<_, _>>>()?;
    Some(ToolCall::new(q.tool_name.clone(), arguments))
}

/// Built-in scripted agent. The message plan is fixed at construction.
#[derive(Debug, Clone)]
pub struct ScriptedAgent {
    kind: AgentKind,
    plan: VecDeque<String>,
    fallback: String,
}

impl ScriptedAgent {
    pub fn new(kind: AgentKind, env: &EnvironmentBundle, budgets: Budgets) -> Self {
        let answer = format!("The final answer is: {}", env.final_answer);
        let (plan, fallback) = match kind {
            AgentKind::Silent => (VecDeque::new(), String::new()),
            AgentKind::Guesser => (VecDeque::new(), answer),
            AgentKind::Oracle => (call_plan(env, 1, budgets.max_calls_per_turn), answer),
            AgentKind::Spammer => (call_plan(env, 2, budgets.max_calls_per_turn), answer),
        };
        ScriptedAgent { kind, plan, fallback }
    }

    pub fn kind(&self) -> AgentKind {
        self.kind
    }
}

impl Agent for ScriptedAgent {
    fn act(&mut self, _: &[Message]) -> Result<String, AgentError> {
        Ok(self.plan.pop_front().unwrap_or_else(|| self.fallback.clone()))
    }
}

/// One message per chunk of each dependency wave; every call repeated
/// `repeat` times back to back.
fn call_plan(env: &EnvironmentBundle, repeat: u32, max_calls: u32) -> VecDeque<String> {
    let graph = DependencyGraph::from_sub_questions(&env.sub_questions);
    let per_turn = (max_calls / repeat).max(1) as usize;
    let mut solved = BTreeSet::new();
    let mut answers = BTreeMap::new();
    let mut plan = VecDeque::new();
    loop {
        let wave = graph.solvable_frontier(&solved);
        if wave.is_empty() {
            break;
        }
        let calls: Vec<ToolCall> = wave
            .iter()
            .filter_map(|id| env.sub_question(id))
            .filter_map(|q| canonical_call(q, &answers))
            .collect();
        for chunk in calls.chunks(per_turn) {
            let blocks: Vec<String> = chunk
                .iter()
                .flat_map(|c| std::iter::repeat_n(c, repeat as usize))
                .map(|c| format!("<tool_call>\n{}\n</tool_call>", c.to_wire_json()))
                .collect();
            plan.push_back(blocks.join("\n"));
        }
        for id in wave {
            if let Some(q) = env.sub_question(&id) {
                answers.insert(id.clone(), q.answer.clone());
            }
            solved.insert(id);
        }
    }
    plan
}
