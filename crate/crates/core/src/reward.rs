//! Step-level verifiable rewards and evaluation metrics.
//!
//! The balanced reward scores a turn with `p` tool invocations of which `q`
//! solved a new sub-question as `2q / (p + 1)`; turns without tool calls fall
//! through the empty, format-error, answer-containment and completion cases
//! in that order.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::engine::TurnKind;
use crate::normalize::{contains_answer, values_match};
use crate::runtime::ToolCall;

/// Counters for one assistant turn.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct TurnStats {
    /// Tool invocations in the turn.
    pub p: u32,
    /// Sub-questions solved for the first time in the turn.
    pub q: u32,
    /// Sub-questions still unsolved after the turn.
    pub t: u32,
    pub o_kind: TurnKind,
    pub final_contains_answer: bool,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RewardVariant {
    /// `2q / (p + 1)`
    #[default]
    Balanced,
    /// `q / p`
    SolveP,
    /// `q`
    SolveR,
    /// `q * q / p`
    #[serde(rename = "solve_pr")]
    SolvePR,
}

impl RewardVariant {
    pub const ALL: [RewardVariant; 4] = [
        RewardVariant::Balanced,
        RewardVariant::SolveP,
        RewardVariant::SolveR,
        RewardVariant::SolvePR,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            RewardVariant::Balanced => "balanced",
            RewardVariant::SolveP => "solve_p",
            RewardVariant::SolveR => "solve_r",
            RewardVariant::SolvePR => "solve_pr",
        }
    }
}

impl fmt::Display for RewardVariant {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for RewardVariant {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        RewardVariant::ALL
            .into_iter()
            .find(|v| v.as_str() == s)
            .ok_or_else(|| format!("unknown reward variant '{s}'"))
    }
}

pub fn turn_reward(stats: &TurnStats, variant: RewardVariant) -> f64 {
    let p = f64::from(stats.p);
    let q = f64::from(stats.q);
    if stats.p > 0 {
        return match variant {
            RewardVariant::Balanced => 2.0 * q / (p + 1.0),
            RewardVariant::SolveP => q / p,
            RewardVariant::SolveR => q,
            RewardVariant::SolvePR => q * q / p,
        };
    }
    match stats.o_kind {
        TurnKind::Empty => -0.5,
        TurnKind::FormatError => -0.3,
        _ if stats.final_contains_answer => 1.0 / (f64::from(stats.t) + 1.0),
        _ if stats.t == 0 => 0.5,
        _ => 0.0,
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SolveScores {
    pub precision: f64,
    pub recall: f64,
    pub f1: f64,
}

/// Per-instance Solve-P / Solve-R / Solve-F1 from episode totals.
///
/// # Panics
///
/// If `n == 0`.
pub fn solve_scores(p_total: u32, q_total: u32, n: u32) -> SolveScores {
    assert!(n >= 1, "an instance has at least one sub-question");
    let precision = if p_total > 0 {
        f64::from(q_total) / f64::from(p_total)
    } else {
        1.0
    };
    let recall = f64::from(q_total) / f64::from(n);
    let f1 = if precision + recall == 0.0 {
        0.0
    } else {
        2.0 * precision * recall / (precision + recall)
    };
    SolveScores {
        precision,
        recall,
        f1,
    }
}

/// 1 when the normalized gold answer occurs in the normalized output.
pub fn answer_correctness(final_output: &str, gold: &str) -> u8 {
    u8::from(contains_answer(final_output, gold))
}

/// # Panics
///
/// If `attempts == 0` or `correct > attempts`.
pub fn pass_hat_1(correct: u32, attempts: u32) -> f64 {
    assert!(attempts >= 1 && correct <= attempts);
    f64::from(correct) / f64::from(attempts)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct CascadeScores {
    pub ts: u8,
    pub pi: u8,
    pub cf: u8,
}

/// Tool selection, parameter identification, content filling.
pub fn ts_pi_cf(pred: &ToolCall, gold: &ToolCall) -> CascadeScores {
    let ts = u8::from(pred.name == gold.name);
    let same_keys = pred.arguments.len() == gold.arguments.len()
        && gold.arguments.keys().all(|k| pred.arguments.contains_key(k));
    let pi = if same_keys { ts } else { 0 };
    let same_values = same_keys
        && gold
            .arguments
            .iter()
            .all(|(k, v)| values_match(v, &pred.arguments[k]));
    let cf = if same_values { pi } else { 0 };
    CascadeScores { ts, pi, cf }
}
