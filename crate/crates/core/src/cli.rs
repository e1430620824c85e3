//! The `gym` command line. Exit codes: 0 success, 1 validation failure,
//! 2 usage error.

use std::collections::BTreeSet;
use std::ffi::OsString;
use std::fs;
use std::io::{self, BufRead, BufReader, Write};
use std::net::TcpListener;
use std::path::{Path, PathBuf};
use std::sync::Arc;
use std::time::Duration;

use clap::{Parser, Subcommand, ValueEnum};
use serde::Deserialize;
use serde_json::{json, Value};

use crate::engine::{run_episode, AgentKind, Budgets, ScriptedAgent};
use crate::model::{validate_bundle, EnvironmentBundle, ScenarioKind};
use crate::pipeline::llm::{ChatClient, HttpChatClient, LlmBackend, ManualInput, RecordingClient, ReplayClient};
use crate::pipeline::presets::preset_seed;
use crate::pipeline::{build_environment, GenerationBackend, ScenarioSeed, SyntheticBackend};
use crate::reward::{pass_hat_1, ts_pi_cf, RewardVariant};
use crate::runtime::ToolCall;
use crate::service::{load_bundle_dir, Gym, ServiceConfig};
use crate::store::{read_all, resample_manifest, RolloutLayout, TrajectoryStore};

#[derive(Debug, Parser)]
#[command(name = "gym", version, about = "Build tool-use environments and run scored episodes against them")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
pub enum BackendKind {
    Synthetic,
    Llm,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
pub enum Metric {
    Solve,
    Ac,
    Pass1,
    Tspicf,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
pub enum ExportFormat {
    Jsonl,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Build environment bundles and write one JSON file per bundle.
    Generate {
        #[arg(long)]
        scenario: ScenarioKind,
        #[arg(long, default_value_t = 1)]
        count: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Sub-question count; drawn from the scenario preset when absent.
        #[arg(long)]
        n: Option<usize>,
        /// Distractor tools per bundle (preset value when absent).
        #[arg(long)]
        distractors: Option<usize>,
        /// Maximum optional parameters added per tool.
        #[arg(long)]
        expand: Option<usize>,
        /// Probability of wrapping each scalar parameter.
        #[arg(long)]
        type_prob: Option<f64>,
        /// Rewrite tool descriptions through the backend.
        #[arg(long)]
        functional: bool,
        /// Synthetic relation id used for the first hop of each chain.
        #[arg(long)]
        template: Option<String>,
        #[arg(long, value_enum, default_value = "synthetic")]
        backend: BackendKind,
        /// Hand-written decomposition (LLM backend).
        #[arg(long)]
        manual: Option<PathBuf>,
        /// Save every chat exchange to this JSONL file (LLM backend).
        #[arg(long)]
        record: Option<PathBuf>,
        /// Serve chat exchanges from a recording instead of the network.
        #[arg(long)]
        replay: Option<PathBuf>,
        #[arg(long)]
        out: PathBuf,
    },
    /// Check bundle files or directories of bundles.
    Validate {
        #[arg(required = true)]
        paths: Vec<PathBuf>,
    },
    /// Serve the line-JSON session protocol.
    Serve {
        #[arg(long, default_value = "127.0.0.1:7878")]
        bind: String,
        /// Speak the protocol on stdin/stdout instead of TCP.
        #[arg(long)]
        stdio: bool,
        #[arg(long)]
        bundles: Option<PathBuf>,
        #[arg(long, default_value_t = 64)]
        max_sessions: usize,
        #[arg(long, default_value_t = 600)]
        idle_timeout: u64,
        #[arg(long, default_value = "balanced")]
        variant: RewardVariant,
        /// Append finished episodes to `<rollouts>/epoch-<epoch>.jsonl`.
        #[arg(long)]
        rollouts: Option<PathBuf>,
        #[arg(long, default_value_t = 1)]
        epoch: u32,
    },
    /// Run one scripted agent against a bundle and print its metrics.
    RunEpisode {
        #[arg(long)]
        env: PathBuf,
        #[arg(long, default_value = "oracle")]
        agent: AgentKind,
        #[arg(long, default_value = "balanced")]
        variant: RewardVariant,
        /// Append the trajectory to this JSONL file.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Score trajectories, or `{"pred", "gold"}` call pairs for tspicf.
    Score {
        #[arg(long)]
        trajectories: PathBuf,
        #[arg(long, value_enum)]
        metric: Metric,
    },
    /// Copy the valid records of one epoch to stdout or a file.
    Export {
        #[arg(long, default_value = "rollouts")]
        rollouts: PathBuf,
        #[arg(long)]
        epoch: u32,
        #[arg(long, value_enum, default_value = "jsonl")]
        format: ExportFormat,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Print the resampling manifest for an epoch over a bundle directory.
    Manifest {
        #[arg(long)]
        bundles: PathBuf,
        #[arg(long)]
        epoch: u32,
        #[arg(long, default_value_t = 0)]
        seed: u64,
    },
}

/// Outcome of a subcommand that did not fail on usage.
enum Failure {
    Validation(String),
    Usage(String),
}

type CmdResult = Result<(), Failure>;

fn usage(e: impl ToString) -> Failure {
    Failure::Usage(e.to_string())
}

fn invalid(e: impl ToString) -> Failure {
    Failure::Validation(e.to_string())
}

/// Parses `args` (including the program name) and runs the command.
pub fn run<I, T>(args: I, out: &mut dyn Write, err: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let _ = write!(err, "{}", e.render());
            return if e.use_stderr() { 2 } else { 0 };
        }
    };
    match execute(cli.command, out, err) {
        Ok(()) => 0,
        Err(Failure::Validation(m)) => {
            let _ = writeln!(err, "error: {m}");
            1
        }
        Err(Failure::Usage(m)) => {
            let _ = writeln!(err, "error: {m}\n\n{}", Cli::synopsis());
            2
        }
    }
}

impl Cli {
    fn synopsis() -> String {
        use clap::CommandFactory;
        Cli::command().render_usage().to_string()
    }
}

fn execute(command: Command, out: &mut dyn Write, err: &mut dyn Write) -> CmdResult {
    match command {
        Command::Generate {
            scenario,
            count,
            seed,
            n,
            distractors,
            expand,
            type_prob,
            functional,
            template,
            backend,
            manual,
            record,
            replay,
            out: dir,
        } => {
            fs::create_dir_all(&dir).map_err(usage)?;
            let overrides = |seed: u64| {
                let (mut s, mut cfg) = preset_seed(scenario, seed);
                if let Some(n) = n {
                    s.n_subq = n;
                }
                s.templates = template.clone();
                if let Some(k) = distractors {
                    cfg.toolset_extension = k;
                }
                if let Some(m) = expand {
                    cfg.parameter_expansion = m;
                }
                if let Some(p) = type_prob {
                    cfg.type_generalization = p;
                }
                cfg.functional_generalization = functional;
                (s, cfg)
            };
            match backend {
                BackendKind::Synthetic => {
                    for i in 0..count as u64 {
                        let (s, cfg) = overrides(seed.wrapping_add(i));
                        let env = build_environment(&s, &cfg, &mut SyntheticBackend).map_err(|e| invalid(e))?;
                        write_bundle(&dir, &env, out)?;
                    }
                }
                BackendKind::Llm => {
                    let manual = manual.ok_or_else(|| usage("--backend llm needs --manual FILE"))?;
                    let text = fs::read_to_string(&manual).map_err(usage)?;
                    let input: ManualInput = serde_json::from_str(&text).map_err(|e| usage(format!("{}: {e}", manual.display())))?;
                    let (mut s, cfg) = overrides(seed);
                    s = ScenarioSeed { templates: None, ..input.seed(s.rng_seed) };
                    let client = match &replay {
                        Some(path) => CliClient::Replay(ReplayClient::from_jsonl(path).map_err(usage)?),
                        None => CliClient::Live(RecordingClient::new(HttpChatClient::from_env().map_err(usage)?)),
                    };
                    let mut backend = LlmBackend::new(client, input);
                    let result = build_environment(&s, &cfg, &mut backend as &mut dyn GenerationBackend);
                    if let (Some(path), CliClient::Live(rec)) = (&record, backend.into_client()) {
                        rec.write_jsonl(path).map_err(usage)?;
                    }
                    write_bundle(&dir, &result.map_err(invalid)?, out)?;
                }
            }
            Ok(())
        }
        Command::Validate { paths } => {
            let mut files = Vec::new();
            for p in paths {
                if p.is_dir() {
                    let mut inner: Vec<PathBuf> = fs::read_dir(&p)
                        .map_err(usage)?
                        .filter_map(|e| e.ok().map(|e| e.path()))
                        .filter(|f| f.extension().is_some_and(|x| x == "json"))
                        .collect();
                    inner.sort();
                    files.extend(inner);
                } else {
                    files.push(p);
                }
            }
            let mut bad = 0;
            for f in &files {
                match fs::read_to_string(f)
                    .map_err(|e| e.to_string())
                    .and_then(|t| EnvironmentBundle::from_json(&t).map_err(|e| e.to_string()))
                {
                    Err(e) => {
                        bad += 1;
                        let _ = writeln!(out, "INVALID {}: {e}", f.display());
                    }
                    Ok(env) => {
                        let report = validate_bundle(&env);
                        if report.is_empty() {
                            let _ = writeln!(out, "ok {}", f.display());
                        } else {
                            bad += 1;
                            let _ = writeln!(out, "INVALID {}: {report}", f.display());
                        }
                    }
                }
            }
            if bad > 0 {
                return Err(invalid(format!("{bad} of {} bundles invalid", files.len())));
            }
            Ok(())
        }
        Command::Serve {
            bind,
            stdio,
            bundles,
            max_sessions,
            idle_timeout,
            variant,
            rollouts,
            epoch,
        } => {
            let envs = match bundles {
                Some(dir) => load_bundle_dir(dir).map_err(invalid)?,
                None => Vec::new(),
            };
            let config = ServiceConfig {
                max_sessions,
                idle_timeout: Duration::from_secs(idle_timeout),
                default_variant: variant,
            };
            let mut gym = Gym::new(envs, config);
            if let Some(root) = rollouts {
                gym = gym.with_store(RolloutLayout::new(root).open_epoch(epoch).map_err(usage)?);
            }
            if stdio {
                let stdin = io::stdin();
                gym.serve_stream(stdin.lock(), io::stdout().lock()).map_err(usage)
            } else {
                let listener = TcpListener::bind(&bind).map_err(usage)?;
                let _ = writeln!(err, "listening on {}", listener.local_addr().map_err(usage)?);
                Arc::new(gym).serve_tcp(listener).map_err(usage)
            }
        }
        Command::RunEpisode { env, agent, variant, out: traj_out } => {
            let text = fs::read_to_string(&env).map_err(usage)?;
            let bundle = EnvironmentBundle::from_json(&text).map_err(|e| invalid(format!("{}: {e}", env.display())))?;
            let report = validate_bundle(&bundle);
            if !report.is_empty() {
                return Err(invalid(format!("{}: {report}", env.display())));
            }
            let budgets = Budgets::for_env(&bundle);
            let mut scripted = ScriptedAgent::new(agent, &bundle, budgets);
            let traj = run_episode(&bundle, &mut scripted, budgets, variant).map_err(invalid)?;
            let s = traj.summary();
            let _ = writeln!(out, "env {}", traj.env_id);
            let _ = writeln!(out, "agent {}", agent.as_str());
            let _ = writeln!(out, "outcome {}", json!(s.outcome).as_str().unwrap_or_default());
            let _ = writeln!(out, "SolveP {:.4}", s.solve_p);
            let _ = writeln!(out, "SolveR {:.4}", s.solve_r);
            let _ = writeln!(out, "SolveF1 {:.4}", s.solve_f1);
            let _ = writeln!(out, "AC {}", s.ac);
            let _ = writeln!(out, "rewards {}", json!(traj.rewards()));
            if let Some(path) = traj_out {
                TrajectoryStore::open(path).and_then(|st| st.append(&traj)).map_err(usage)?;
            }
            Ok(())
        }
        Command::Score { trajectories, metric } => {
            let report = score(&trajectories, metric)?;
            let _ = writeln!(out, "{}", serde_json::to_string_pretty(&report).expect("report serializes"));
            Ok(())
        }
        Command::Export {
            rollouts,
            epoch,
            format: ExportFormat::Jsonl,
            out: dest,
        } => {
            let path = RolloutLayout::new(rollouts).epoch_path(epoch);
            let read = read_all(&path).map_err(usage)?;
            let mut sink: Box<dyn Write> = match dest {
                Some(p) => Box::new(fs::File::create(p).map_err(usage)?),
                None => Box::new(&mut *out),
            };
            for (_, traj) in &read.records {
                writeln!(sink, "{}", traj.to_json_line()).map_err(usage)?;
            }
            sink.flush().map_err(usage)?;
            drop(sink);
            for c in &read.errors {
                let _ = writeln!(err, "record {}: {}", c.offset, c.error);
            }
            if !read.errors.is_empty() {
                return Err(invalid(format!("{} corrupt records skipped in {}", read.errors.len(), path.display())));
            }
            Ok(())
        }
        Command::Manifest { bundles, epoch, seed } => {
            let ids: Vec<String> = load_bundle_dir(bundles).map_err(invalid)?.into_iter().map(|b| b.id).collect();
            let manifest = resample_manifest(epoch, &ids, seed).map_err(usage)?;
            let _ = writeln!(out, "{}", serde_json::to_string_pretty(&manifest).expect("manifest serializes"));
            Ok(())
        }
    }
}

fn write_bundle(dir: &Path, env: &EnvironmentBundle, out: &mut dyn Write) -> CmdResult {
    let path = dir.join(format!("{}.json", env.id));
    fs::write(&path, env.to_json_pretty()).map_err(usage)?;
    let _ = writeln!(out, "{}", path.display());
    Ok(())
}

enum CliClient {
    Replay(ReplayClient),
    Live(RecordingClient<HttpChatClient>),
}

impl ChatClient for CliClient {
    fn complete(&mut self, prompt: &str) -> Result<String, String> {
        match self {
            CliClient::Replay(c) => c.complete(prompt),
            CliClient::Live(c) => c.complete(prompt),
        }
    }
}

#[derive(Deserialize)]
struct CallPair {
    pred: ToolCall,
    gold: ToolCall,
}

fn mean(values: impl Iterator<Item = f64>) -> f64 {
    let (sum, n) = values.fold((0.0, 0usize), |(s, n), v| (s + v, n + 1));
    if n == 0 {
        0.0
    } else {
        sum / n as f64
    }
}

fn score(path: &Path, metric: Metric) -> Result<Value, Failure> {
    let file = fs::File::open(path).map_err(usage)?;
    if let Metric::Tspicf = metric {
        let mut rows = Vec::new();
        for (i, line) in BufReader::new(file).lines().enumerate() {
            let line = line.map_err(usage)?;
            if line.trim().is_empty() {
                continue;
            }
            let pair: CallPair = serde_json::from_str(&line).map_err(|e| invalid(format!("line {}: {e}", i + 1)))?;
            rows.push(ts_pi_cf(&pair.pred, &pair.gold));
        }
        return Ok(json!({
            "metric": "tspicf",
            "instances": rows,
            "average": {
                "ts": mean(rows.iter().map(|r| f64::from(r.ts))),
                "pi": mean(rows.iter().map(|r| f64::from(r.pi))),
                "cf": mean(rows.iter().map(|r| f64::from(r.cf))),
            }
        }));
    }
    drop(file);
    let read = read_all(path).map_err(usage)?;
    if let Some(c) = read.errors.first() {
        return Err(invalid(format!("record {}: {}", c.offset, c.error)));
    }
    let trajs: Vec<_> = read.records.into_iter().map(|(_, t)| t).collect();
    let summaries: Vec<_> = trajs.iter().map(|t| t.summary()).collect();
    Ok(match metric {
        Metric::Solve => json!({
            "metric": "solve",
            "instances": trajs.iter().zip(&summaries).map(|(t, s)| json!({
                "env_id": t.env_id, "solve_p": s.solve_p, "solve_r": s.solve_r, "solve_f1": s.solve_f1,
            })).collect::<Vec<_>>(),
            "average": {
                "solve_p": mean(summaries.iter().map(|s| s.solve_p)),
                "solve_r": mean(summaries.iter().map(|s| s.solve_r)),
                "solve_f1": mean(summaries.iter().map(|s| s.solve_f1)),
            }
        }),
        Metric::Ac => json!({
            "metric": "ac",
            "instances": trajs.iter().zip(&summaries).map(|(t, s)| json!({"env_id": t.env_id, "ac": s.ac})).collect::<Vec<_>>(),
            "average": {"ac": mean(summaries.iter().map(|s| f64::from(s.ac)))},
        }),
        Metric::Pass1 => {
            let mut seen = BTreeSet::new();
            let mut firsts = Vec::new();
            for (t, s) in trajs.iter().zip(&summaries) {
                if seen.insert(t.env_id.clone()) {
                    firsts.push(json!({"env_id": t.env_id, "correct": s.ac}));
                }
            }
            let correct = firsts.iter().filter(|f| f["correct"] == json!(1)).count() as u32;
            let value = if firsts.is_empty() { 0.0 } else { pass_hat_1(correct, firsts.len() as u32) };
            json!({"metric": "pass1", "instances": firsts, "average": {"pass1": value}})
        }
        Metric::Tspicf => unreachable!("handled above"),
    })
}
