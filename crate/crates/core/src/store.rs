//! Training-instance records, append-only JSONL persistence and per-epoch
//! resampling manifests.

use std::fs::{self, File, OpenOptions};
use std::io::{self, BufRead, BufReader, Write};
use std::path::{Path, PathBuf};
use std::sync::Mutex;

use rand::seq::SliceRandom;
use rand::{RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use thiserror::Error;

use crate::engine::{Budgets, Message};
use crate::model::ToolDocument;
use crate::reward::{RewardVariant, TurnStats};

#[derive(Debug, Error)]
pub enum StoreError {
    #[error("IO_FAILURE: {0}")]
    Io(#[from] io::Error),
    #[error("trajectory violates its invariants: {0}")]
    Invalid(String),
    #[error("epoch must be >= 1, got {0}")]
    InvalidEpoch(u32),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Outcome {
    Answered,
    Empty,
    FormatError,
    BudgetExhausted,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RemainingSubQuestion {
    pub id: String,
    pub question: String,
    pub answer: String,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TurnRecord {
    pub stats: TurnStats,
    pub reward: f64,
}

/// One training instance: the sampled interaction, the tools on offer, the
/// gold final answer and the sub-questions left unsolved with their
/// answers, plus per-turn stats and rewards.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Trajectory {
    pub env_id: String,
    pub transcript: Vec<Message>,
    pub tools: Vec<ToolDocument>,
    pub final_answer: String,
    pub remaining: Vec<RemainingSubQuestion>,
    pub solved: Vec<String>,
    pub n_sub_questions: u32,
    pub p_total: u32,
    pub budgets: Budgets,
    pub variant: RewardVariant,
    pub per_turn: Vec<TurnRecord>,
    pub outcome: Outcome,
    pub final_output: Option<String>,
    pub epoch: u32,
    pub sampler_seed: u64,
}

impl Trajectory {
    pub fn q_total(&self) -> u32 {
        self.solved.len() as u32
    }

    pub fn rewards(&self) -> Vec<f64> {
        self.per_turn.iter().map(|t| t.reward).collect()
    }

    pub fn summary(&self) -> EpisodeSummary {
        let scores = crate::reward::solve_scores(self.p_total, self.q_total(), self.n_sub_questions.max(1));
        EpisodeSummary {
            n_sub_questions: self.n_sub_questions,
            p_total: self.p_total,
            q_total: self.q_total(),
            solve_p: scores.precision,
            solve_r: scores.recall,
            solve_f1: scores.f1,
            ac: crate::reward::answer_correctness(self.final_output.as_deref().unwrap_or(""), &self.final_answer),
            turns: self.per_turn.len() as u32,
            total_reward: self.rewards().iter().sum(),
            outcome: self.outcome,
        }
    }

    pub fn check_invariants(&self) -> Result<(), String> {
        let covered = self.remaining.len() + self.solved.len();
        if covered != self.n_sub_questions as usize {
            return Err(format!(
                "{} remaining + {} solved != {} sub-questions",
                self.remaining.len(),
                self.solved.len(),
                self.n_sub_questions
            ));
        }
        if self.remaining.iter().any(|r| self.solved.contains(&r.id)) {
            return Err("a sub-question is both solved and remaining".into());
        }
        let assistant_turns = self
            .transcript
            .iter()
            .filter(|m| m.role == crate::engine::Role::Assistant)
            .count();
        if assistant_turns != self.per_turn.len() {
            return Err(format!(
                "{} assistant turns but {} per-turn records",
                assistant_turns,
                self.per_turn.len()
            ));
        }
        Ok(())
    }

    /// Canonical single-line JSON (struct field order).
    pub fn to_json_line(&self) -> String {
        serde_json::to_string(self).expect("trajectory serializes")
    }
}

/// End-of-episode metrics.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EpisodeSummary {
    pub n_sub_questions: u32,
    pub p_total: u32,
    pub q_total: u32,
    pub solve_p: f64,
    pub solve_r: f64,
    pub solve_f1: f64,
    pub ac: u8,
    pub turns: u32,
    pub total_reward: f64,
    pub outcome: Outcome,
}

/// Returned by [`TrajectoryStore::append`].
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Receipt {
    pub offset: u64,
}

struct Writer {
    file: File,
    next_offset: u64,
}

/// Append-only JSONL file of trajectories. Offsets count records (lines)
/// from the start of the file.
pub struct TrajectoryStore {
    path: PathBuf,
    writer: Mutex<Writer>,
}

impl TrajectoryStore {
    pub fn open(path: impl AsRef<Path>) -> Result<Self, StoreError> {
        let path = path.as_ref().to_path_buf();
        if let Some(parent) = path.parent().filter(|p| !p.as_os_str().is_empty()) {
            fs::create_dir_all(parent)?;
        }
        let next_offset = match File::open(&path) {
            Ok(f) => BufReader::new(f)
                .lines()
                .map(|l| l.map(|l| !l.trim().is_empty()))
                .collect::<io::Result<Vec<bool>>>()?
                .into_iter()
                .filter(|nonempty| *nonempty)
                .count() as u64,
            Err(e) if e.kind() == io::ErrorKind::NotFound => 0,
            Err(e) => return Err(e.into()),
        };
        let file = OpenOptions::new().create(true).append(true).open(&path)?;
        Ok(TrajectoryStore {
            path,
            writer: Mutex::new(Writer { file, next_offset }),
        })
    }

    pub fn path(&self) -> &Path {
        &self.path
    }

    pub fn append(&self, traj: &Trajectory) -> Result<Receipt, StoreError> {
        traj.check_invariants().map_err(StoreError::Invalid)?;
        let mut line = traj.to_json_line();
        line.push('\n');
        let mut w = self.writer.lock().unwrap_or_else(|e| e.into_inner());
        w.file.write_all(line.as_bytes())?;
        w.file.sync_data()?;
        let offset = w.next_offset;
        w.next_offset += 1;
        Ok(Receipt { offset })
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct CorruptRecord {
    pub offset: u64,
    pub error: String,
}

#[derive(Debug, Clone, Default)]
pub struct ReadOutcome {
    pub records: Vec<(u64, Trajectory)>,
    pub errors: Vec<CorruptRecord>,
}

/// Reads every record, skipping (and reporting) lines that fail to parse.
pub fn read_all(path: impl AsRef<Path>) -> Result<ReadOutcome, StoreError> {
    let reader = BufReader::new(File::open(path)?);
    let mut out = ReadOutcome::default();
    let mut offset = 0u64;
    for line in reader.lines() {
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        match serde_json::from_str::<Trajectory>(&line) {
            Ok(t) => out.records.push((offset, t)),
            Err(e) => out.errors.push(CorruptRecord {
                offset,
                error: e.to_string(),
            }),
        }
        offset += 1;
    }
    Ok(out)
}

/// `rollouts/epoch-<k>.jsonl` layout under a root directory.
#[derive(Debug, Clone)]
pub struct RolloutLayout {
    root: PathBuf,
}

impl RolloutLayout {
    pub fn new(root: impl Into<PathBuf>) -> Self {
        RolloutLayout { root: root.into() }
    }

    pub fn epoch_path(&self, epoch: u32) -> PathBuf {
        self.root.join(format!("epoch-{epoch}.jsonl"))
    }

    pub fn open_epoch(&self, epoch: u32) -> Result<TrajectoryStore, StoreError> {
        TrajectoryStore::open(self.epoch_path(epoch))
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ManifestEntry {
    pub env_id: String,
    pub episode_seed: u64,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Manifest {
    pub epoch: u32,
    pub seed: u64,
    pub entries: Vec<ManifestEntry>,
}

/// Deterministic per-epoch order and episode seeds, derived from
/// `sha256(seed || epoch)`.
pub fn resample_manifest(epoch: u32, env_ids: &[String], seed: u64) -> Result<Manifest, StoreError> {
    if epoch == 0 {
        return Err(StoreError::InvalidEpoch(epoch));
    }
    let mut hasher = Sha256::new();
    hasher.update(seed.to_le_bytes());
    hasher.update(epoch.to_le_bytes());
    let digest = hasher.finalize();
    let mut key = [0u8; 32];
    key.copy_from_slice(&digest);
    let mut rng = ChaCha8Rng::from_seed(key);

    let mut order: Vec<&String> = env_ids.iter().collect();
    order.shuffle(&mut rng);
    let entries = order
        .into_iter()
        .map(|id| ManifestEntry {
            env_id: id.clone(),
            episode_seed: rng.next_u64(),
        })
        .collect();
    Ok(Manifest { epoch, seed, entries })
}
