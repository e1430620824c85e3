//! Multi-turn episodes: parse assistant turns, route tool calls to the
//! runtime, track solved sub-questions and budgets, score every turn.

mod agents;
mod parser;

use std::collections::BTreeMap;
use std::fmt;

use serde::{Deserialize, Serialize};
use thiserror::Error;

pub use agents::{canonical_call, Agent, AgentError, AgentKind, ScriptedAgent};
pub use parser::{parse_assistant_message, strip_reasoning, ParsedTurn, TurnKind};

use crate::model::{EnvironmentBundle, ToolDocument, ViolationCode};
use crate::normalize::contains_answer;
use crate::reward::{turn_reward, RewardVariant, TurnStats};
use crate::runtime::{invoke, ToolCall, ToolResponse};
use crate::store::{Outcome, RemainingSubQuestion, Trajectory, TurnRecord};

#[derive(Debug, Error)]
pub enum EngineError {
    #[error("STEP_AFTER_DONE: episode {0} already finished")]
    StepAfterDone(String),
    #[error("AGENT_FAILURE at turn {turn}: {source}")]
    AgentFailure {
        turn: u32,
        #[source]
        source: AgentError,
    },
    #[error("invalid budgets: {0}")]
    InvalidBudgets(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Role {
    System,
    User,
    Assistant,
    Tool,
}

impl fmt::Display for Role {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Role::System => "system",
            Role::User => "user",
            Role::Assistant => "assistant",
            Role::Tool => "tool",
        })
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Message {
    pub role: Role,
    pub content: String,
}

impl Message {
    pub fn new(role: Role, content: impl Into<String>) -> Self {
        Message {
            role,
            content: content.into(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Budgets {
    pub max_turns: u32,
    pub max_calls_per_turn: u32,
}

impl Budgets {
    /// `max_turns = 2n + 2`, `max_calls_per_turn = 8`.
    pub fn for_sub_questions(n: usize) -> Self {
        Budgets {
            max_turns: 2 * n as u32 + 2,
            max_calls_per_turn: 8,
        }
    }

    pub fn for_env(env: &EnvironmentBundle) -> Self {
        Self::for_sub_questions(env.sub_questions.len())
    }

    fn check(&self) -> Result<(), EngineError> {
        if self.max_turns == 0 || self.max_calls_per_turn == 0 {
            return Err(EngineError::InvalidBudgets(format!("{self:?}")));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TurnOutcome {
    Continue,
    Answered,
    Empty,
    FormatError,
    BudgetExhausted,
}

impl TurnOutcome {
    fn terminal(self) -> Option<Outcome> {
        match self {
            TurnOutcome::Continue => None,
            TurnOutcome::Answered => Some(Outcome::Answered),
            TurnOutcome::Empty => Some(Outcome::Empty),
            TurnOutcome::FormatError => Some(Outcome::FormatError),
            TurnOutcome::BudgetExhausted => Some(Outcome::BudgetExhausted),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StepResult {
    pub kind: TurnKind,
    pub responses: Vec<ToolResponse>,
    pub stats: TurnStats,
    pub reward: f64,
    pub outcome: TurnOutcome,
    pub done: bool,
}

/// Live state of one episode.
#[derive(Debug, Clone, PartialEq)]
pub struct EpisodeState {
    pub env_id: String,
    pub transcript: Vec<Message>,
    /// Solved sub-question ids in the order they were solved.
    pub solved: Vec<String>,
    pub p_total: u32,
    pub turn_index: u32,
    pub budgets: Budgets,
    pub variant: RewardVariant,
    pub done: bool,
    pub final_output: Option<String>,
    pub outcome: Option<Outcome>,
    pub per_turn: Vec<TurnRecord>,
}

impl EpisodeState {
    pub fn new(env: &EnvironmentBundle, budgets: Budgets, variant: RewardVariant) -> Self {
        EpisodeState {
            env_id: env.id.clone(),
            transcript: vec![
                Message::new(Role::System, render_system_context(&env.documents())),
                Message::new(Role::User, env.question.clone()),
            ],
            solved: Vec::new(),
            p_total: 0,
            turn_index: 0,
            budgets,
            variant,
            done: false,
            final_output: None,
            outcome: None,
            per_turn: Vec::new(),
        }
    }

    pub fn is_solved(&self, id: &str) -> bool {
        self.solved.iter().any(|s| s == id)
    }

    fn solved_answers(&self, env: &EnvironmentBundle) -> BTreeMap<String, String> {
        self.solved
            .iter()
            .filter_map(|id| env.sub_question(id).map(|q| (id.clone(), q.answer.clone())))
            .collect()
    }

    /// Applies one assistant turn.
    pub fn step(&mut self, env: &EnvironmentBundle, assistant_text: &str) -> Result<StepResult, EngineError> {
        if self.done {
            return Err(EngineError::StepAfterDone(self.env_id.clone()));
        }
        let parsed = parse_assistant_message(assistant_text);
        self.transcript.push(Message::new(Role::Assistant, assistant_text));
        self.turn_index += 1;

        let mut responses = Vec::new();
        let mut q = 0u32;
        let mut final_contains_answer = false;
        let outcome = match parsed.kind {
            TurnKind::ToolCalls => {
                for (i, call) in parsed.calls.iter().enumerate() {
                    let resp = if i as u32 >= self.budgets.max_calls_per_turn {
                        ToolResponse::error(
                            ViolationCode::CallLimit,
                            format!(
                                "Error: at most {} tool calls are executed per turn.",
                                self.budgets.max_calls_per_turn
                            ),
                        )
                    } else {
                        self.execute(env, call)
                    };
                    self.p_total += 1;
                    if let (true, Some(id)) = (resp.is_success(), &resp.matched_subq) {
                        if !self.is_solved(id) {
                            self.solved.push(id.clone());
                            q += 1;
                        }
                    }
                    responses.push(resp);
                }
                self.transcript.push(Message::new(Role::Tool, wrap_responses(&responses)));
                if self.turn_index >= self.budgets.max_turns {
                    TurnOutcome::BudgetExhausted
                } else {
                    TurnOutcome::Continue
                }
            }
            TurnKind::FinalAnswer => {
                final_contains_answer = contains_answer(&parsed.content, &env.final_answer);
                self.final_output = Some(parsed.content.clone());
                TurnOutcome::Answered
            }
            TurnKind::Empty => TurnOutcome::Empty,
            TurnKind::FormatError => TurnOutcome::FormatError,
        };

        let stats = TurnStats {
            p: if parsed.kind == TurnKind::ToolCalls { parsed.calls.len() as u32 } else { 0 },
            q,
            t: (env.sub_questions.len() - self.solved.len()) as u32,
            o_kind: parsed.kind,
            final_contains_answer,
        };
        let reward = turn_reward(&stats, self.variant);
        self.per_turn.push(TurnRecord { stats, reward });
        if let Some(o) = outcome.terminal() {
            self.done = true;
            self.outcome = Some(o);
        }
        Ok(StepResult {
            kind: parsed.kind,
            responses,
            stats,
            reward,
            outcome,
            done: self.done,
        })
    }

    fn execute(&self, env: &EnvironmentBundle, call: &ToolCall) -> ToolResponse {
        match env.tool(&call.name) {
            Some(entry) => invoke(&entry.behavior, &entry.document, call, &self.solved_answers(env)),
            None => ToolResponse::error(
                ViolationCode::UnknownTool,
                format!("Error: tool '{}' is not available.", call.name),
            ),
        }
    }

    /// The training instance for this episode.
    pub fn to_trajectory(&self, env: &EnvironmentBundle) -> Trajectory {
        Trajectory {
            env_id: env.id.clone(),
            transcript: self.transcript.clone(),
            tools: env.documents(),
            final_answer: env.final_answer.clone(),
            remaining: env
                .sub_questions
                .iter()
                .filter(|q| !self.is_solved(&q.id))
                .map(|q| RemainingSubQuestion {
                    id: q.id.clone(),
                    question: q.text.clone(),
                    answer: q.answer.clone(),
                })
                .collect(),
            solved: self.solved.clone(),
            n_sub_questions: env.sub_questions.len() as u32,
            p_total: self.p_total,
            budgets: self.budgets,
            variant: self.variant,
            per_turn: self.per_turn.clone(),
            outcome: self.outcome.unwrap_or(Outcome::BudgetExhausted),
            final_output: self.final_output.clone(),
            epoch: 0,
            sampler_seed: 0,
        }
    }
}

/// Environment feedback for one turn, each response in its own
/// `<tool_response>` block.
pub fn wrap_responses(responses: &[ToolResponse]) -> String {
    responses
        .iter()
        .map(|r| format!("<tool_response>\n{}\n</tool_response>", r.payload))
        .collect::<Vec<_>>()
        .join("\n")
}

/// System context offering the tools in function-signature form.
pub fn render_system_context(docs: &[ToolDocument]) -> String {
    let mut s = String::from(
        "# Tools\n\nYou may call one or more functions to assist with the user query.\n\n\
         You are provided with function signatures within <tools></tools> XML tags:\n<tools>",
    );
    for doc in docs {
        s.push('\n');
        s.push_str(&serde_json::json!({"type": "function", "function": doc.to_schema_json()}).to_string());
    }
    s.push_str(
        "\n</tools>\n\nFor each function call, return a json object with function name and \
         arguments within <tool_call></tool_call> XML tags:\n<tool_call>\n\
         {\"name\": <function-name>, \"arguments\": <args-json-object>}\n</tool_call>",
    );
    s
}

/// Drives `agent` until the episode ends and returns the recorded
/// trajectory.
pub fn run_episode(
    env: &EnvironmentBundle,
    agent: &mut dyn Agent,
    budgets: Budgets,
    variant: RewardVariant,
) -> Result<Trajectory, EngineError> {
    budgets.check()?;
    let mut state = EpisodeState::new(env, budgets, variant);
    while !state.done {
        let text = agent
            .act(&state.transcript)
            .map_err(|source| EngineError::AgentFailure {
                turn: state.turn_index + 1,
                source,
            })?;
        state.step(env, &text)?;
    }
    Ok(state.to_trajectory(env))
}

/// Feeds the assistant turns of a stored transcript through a fresh
/// episode.
pub fn replay_transcript(
    env: &EnvironmentBundle,
    transcript: &[Message],
    budgets: Budgets,
    variant: RewardVariant,
) -> Result<EpisodeState, EngineError> {
    let mut state = EpisodeState::new(env, budgets, variant);
    for m in transcript.iter().filter(|m| m.role == Role::Assistant) {
        state.step(env, &m.content)?;
    }
    Ok(state)
}
