//! Tool-use environment forge and feedback gym.
//!
//! The crate builds self-contained tool-use environments (a question, its
//! sub-question dependency graph, and a locally interpreted toolset), runs
//! multi-turn agent episodes against them using the `<tool_call>` /
//! `<tool_response>` tag grammar, and scores every assistant turn with a
//! verifiable step-level reward.
//!
//! Module map:
//!
//! - [`model`]: shared domain types, the bundle file format and structural validation
//! - [`graph`]: scenario classification over the sub-question dependency DAG
//! - [`pipeline`]: environment construction (generate, integrate, scale, deploy)
//! - [`runtime`]: argument validation and tool behavior interpretation
//! - [`engine`]: message parsing, episode stepping and scripted agents
//! - [`reward`]: step rewards and evaluation metrics
//! - [`store`]: trajectory records, JSONL persistence and epoch manifests
//! - [`service`]: line-JSON session protocol over TCP or stdio
//! - [`cli`]: the `gym` command line
//!
//! See the `examples/` directory of this crate for one runnable program per
//! capability.

pub mod cli;
pub mod engine;
pub mod graph;
pub mod model;
pub mod normalize;
pub mod pipeline;
pub mod reward;
pub mod runtime;
pub mod service;
pub mod store;

pub use engine::{
    parse_assistant_message, run_episode, Budgets, EpisodeState, Message, ParsedTurn, Role,
    ScriptedAgent, TurnKind,
};
pub use graph::DependencyGraph;
pub use model::{
    EnvironmentBundle, Literal, ParameterSpec, ScenarioKind, SubQuestion, ToolBehavior,
    ToolDocument, ValidationReport, ValueKind, ValueType, ViolationCode,
};
pub use pipeline::{build_environment, ScalingConfig, ScenarioSeed, SyntheticBackend};
pub use reward::{RewardVariant, TurnStats};
pub use runtime::{ToolCall, ToolResponse};
pub use store::{Trajectory, TrajectoryStore};
