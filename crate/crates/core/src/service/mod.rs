//! Session service: remote agents drive episodes over line-delimited JSON,
//! on TCP or any byte stream (stdio for subprocess embedding).

mod client;
pub mod protocol;

use std::collections::{BTreeMap, HashMap, VecDeque};
use std::fs;
use std::io::{self, BufRead, BufReader, Write};
use std::net::TcpListener;
use std::path::Path;
use std::sync::atomic::{AtomicU64, Ordering};
use std::sync::{Arc, Mutex};
use std::time::{Duration, Instant};

use serde_json::{json, Value};

use crate::engine::{render_system_context, wrap_responses, Budgets, EpisodeState};
use crate::model::{validate_bundle, EnvironmentBundle, ScenarioKind};
use crate::pipeline::presets::preset_seed;
use crate::pipeline::{build_environment, SyntheticBackend};
use crate::reward::RewardVariant;
use crate::store::TrajectoryStore;

pub use client::{ClientError, GymClient};
pub use protocol::{ErrorCode, ReplyOp, Request, Response};

pub const PROTOCOL_VERSION: &str = "gym-line/1";
const CACHE_LIMIT: usize = 64;

#[derive(Debug, Clone, PartialEq)]
pub struct ServiceConfig {
    pub max_sessions: usize,
    pub idle_timeout: Duration,
    pub default_variant: RewardVariant,
}

impl Default for ServiceConfig {
    fn default() -> Self {
        ServiceConfig {
            max_sessions: 64,
            idle_timeout: Duration::from_secs(600),
            default_variant: RewardVariant::Balanced,
        }
    }
}

struct Episode {
    env: Arc<EnvironmentBundle>,
    state: EpisodeState,
}

struct Session {
    variant: RewardVariant,
    episode: Option<Episode>,
    last_active: Instant,
    replies: VecDeque<(String, Response)>,
}

impl Session {
    fn cached(&self, key: &str) -> Option<Response> {
        self.replies.iter().find(|(k, _)| k == key).map(|(_, r)| r.clone())
    }

    fn remember(&mut self, key: String, reply: &Response) {
        if self.replies.len() == CACHE_LIMIT {
            self.replies.pop_front();
        }
        self.replies.push_back((key, reply.clone()));
    }
}

type Shared<T> = Arc<Mutex<T>>;

/// Shared service state: the immutable bundle catalog plus live sessions.
pub struct Gym {
    catalog: BTreeMap<String, Arc<EnvironmentBundle>>,
    generated: Mutex<HashMap<(ScenarioKind, u64), Arc<EnvironmentBundle>>>,
    sessions: Mutex<HashMap<String, Shared<Session>>>,
    next_session: AtomicU64,
    config: ServiceConfig,
    store: Option<TrajectoryStore>,
}

/// Reads every `*.json` bundle in `dir`, sorted by file name. Invalid
/// bundles are an error naming the file.
pub fn load_bundle_dir(dir: impl AsRef<Path>) -> Result<Vec<EnvironmentBundle>, String> {
    let mut paths: Vec<_> = fs::read_dir(dir.as_ref())
        .map_err(|e| format!("{}: {e}", dir.as_ref().display()))?
        .filter_map(|e| e.ok().map(|e| e.path()))
        .filter(|p| p.extension().is_some_and(|x| x == "json"))
        .collect();
    paths.sort();
    let mut out = Vec::new();
    for p in paths {
        let text = fs::read_to_string(&p).map_err(|e| format!("{}: {e}", p.display()))?;
        let env = EnvironmentBundle::from_json(&text).map_err(|e| format!("{}: {e}", p.display()))?;
        let report = validate_bundle(&env);
        if !report.is_empty() {
            return Err(format!("{}: {report}", p.display()));
        }
        out.push(env);
    }
    Ok(out)
}

fn rid_key(v: &Value) -> String {
    v.to_string()
}

impl Gym {
    pub fn new(bundles: Vec<EnvironmentBundle>, config: ServiceConfig) -> Self {
        Gym {
            catalog: bundles.into_iter().map(|b| (b.id.clone(), Arc::new(b))).collect(),
            generated: Mutex::new(HashMap::new()),
            sessions: Mutex::new(HashMap::new()),
            next_session: AtomicU64::new(1),
            config,
            store: None,
        }
    }

    /// Appends a trajectory to `store` whenever an episode ends.
    pub fn with_store(mut self, store: TrajectoryStore) -> Self {
        self.store = Some(store);
        self
    }

    pub fn env_ids(&self) -> Vec<String> {
        self.catalog.keys().cloned().collect()
    }

    pub fn session_count(&self) -> usize {
        self.sessions.lock().expect("session lock").len()
    }

    fn reap_idle(&self, sessions: &mut HashMap<String, Shared<Session>>) {
        let timeout = self.config.idle_timeout;
        sessions.retain(|id, s| {
            let idle = s.lock().map(|s| s.last_active.elapsed() > timeout).unwrap_or(true);
            if idle {
                log::info!("session {id} closed after idle timeout");
            }
            !idle
        });
    }

    /// Handles one raw line and returns the reply line. Sessions created on
    /// behalf of this connection are recorded in `owned`.
    pub fn handle_line(&self, line: &str, owned: &mut Vec<String>) -> String {
        let reply = match serde_json::from_str::<Request>(line) {
            Ok(req) => self.handle(req, owned),
            Err(e) => Response::error(Value::Null, None, ErrorCode::BadRequest, format!("malformed request: {e}")),
        };
        reply.to_line()
    }

    pub fn handle(&self, req: Request, owned: &mut Vec<String>) -> Response {
        if req.request_id.is_null() {
            return Response::error(Value::Null, req.session_id, ErrorCode::BadRequest, "request_id is required");
        }
        match req.op.as_str() {
            "hello" => self.hello(req, owned),
            "reset" | "step" | "close" => self.in_session(req, owned),
            other => Response::error(req.request_id, req.session_id, ErrorCode::UnknownOp, format!("unknown op '{other}'")),
        }
    }

    fn hello(&self, req: Request, owned: &mut Vec<String>) -> Response {
        let variant = match parse_variant(&req.payload, self.config.default_variant) {
            Ok(v) => v,
            Err(m) => return Response::error(req.request_id, None, ErrorCode::BadRequest, m),
        };
        let mut sessions = self.sessions.lock().expect("session lock");
        if let Some(done) = owned.iter().find_map(|id| {
            sessions.get(id).and_then(|s| s.lock().ok()?.cached(&format!("hello:{}", rid_key(&req.request_id))))
        }) {
            return done;
        }
        self.reap_idle(&mut sessions);
        if sessions.len() >= self.config.max_sessions {
            return Response::error(
                req.request_id,
                None,
                ErrorCode::TooManySessions,
                format!("limit of {} sessions reached", self.config.max_sessions),
            );
        }
        let id = format!("s{}", self.next_session.fetch_add(1, Ordering::Relaxed));
        let reply = Response::result(
            req.request_id.clone(),
            Some(id.clone()),
            json!({
                "session_id": id,
                "protocol": PROTOCOL_VERSION,
                "variant": variant,
                "env_ids": self.env_ids(),
                "scenarios": ScenarioKind::ALL,
            }),
        );
        let mut session = Session {
            variant,
            episode: None,
            last_active: Instant::now(),
            replies: VecDeque::new(),
        };
        session.remember(format!("hello:{}", rid_key(&req.request_id)), &reply);
        sessions.insert(id.clone(), Arc::new(Mutex::new(session)));
        owned.push(id);
        reply
    }

    fn in_session(&self, req: Request, owned: &mut Vec<String>) -> Response {
        let rid = req.request_id.clone();
        let Some(sid) = req.session_id.clone() else {
            return Response::error(rid, None, ErrorCode::BadRequest, "session_id is required");
        };
        let handle = {
            let mut sessions = self.sessions.lock().expect("session lock");
            self.reap_idle(&mut sessions);
            sessions.get(&sid).cloned()
        };
        let Some(handle) = handle else {
            return Response::error(rid, Some(sid.clone()), ErrorCode::UnknownSession, format!("no session '{sid}'"));
        };
        let mut session = handle.lock().expect("session lock");
        session.last_active = Instant::now();
        let key = format!("{}:{}", req.op, rid_key(&rid));
        if let Some(reply) = session.cached(&key) {
            return reply;
        }
        let reply = match req.op.as_str() {
            "reset" => self.reset(&mut session, &req),
            "step" => self.step(&mut session, &req),
            _ => {
                drop(session);
                self.sessions.lock().expect("session lock").remove(&sid);
                owned.retain(|o| o != &sid);
                return Response::result(rid, Some(sid), json!({"closed": true}));
            }
        };
        session.remember(key, &reply);
        reply
    }

    fn resolve_env(&self, payload: &Value) -> Result<Arc<EnvironmentBundle>, (ErrorCode, String)> {
        if let Some(id) = payload.get("env_id").and_then(Value::as_str) {
            if let Some(env) = self.catalog.get(id) {
                return Ok(env.clone());
            }
            let generated = self.generated.lock().expect("generated lock");
            return generated
                .values()
                .find(|e| e.id == id)
                .cloned()
                .ok_or((ErrorCode::NotFound, format!("no environment '{id}'")));
        }
        let scenario = payload
            .get("scenario")
            .and_then(Value::as_str)
            .ok_or((ErrorCode::BadRequest, "reset needs env_id or scenario".to_string()))?;
        let scenario: ScenarioKind = scenario.parse().map_err(|e| (ErrorCode::NotFound, e))?;
        let seed = payload.get("seed").and_then(Value::as_u64).unwrap_or(0);
        let mut generated = self.generated.lock().expect("generated lock");
        if let Some(env) = generated.get(&(scenario, seed)) {
            return Ok(env.clone());
        }
        let (s, cfg) = preset_seed(scenario, seed);
        let env = build_environment(&s, &cfg, &mut SyntheticBackend)
            .map_err(|e| (ErrorCode::BuildFailed, e.to_string()))?;
        let env = Arc::new(env);
        generated.insert((scenario, seed), env.clone());
        Ok(env)
    }

    fn reset(&self, session: &mut Session, req: &Request) -> Response {
        let rid = req.request_id.clone();
        let sid = req.session_id.clone();
        let variant = match parse_variant(&req.payload, session.variant) {
            Ok(v) => v,
            Err(m) => return Response::error(rid, sid, ErrorCode::BadRequest, m),
        };
        let env = match self.resolve_env(&req.payload) {
            Ok(env) => env,
            Err((code, message)) => return Response::error(rid, sid, code, message),
        };
        if session.episode.as_ref().is_some_and(|e| !e.state.done) {
            log::info!("{:?}: active episode abandoned by reset", sid);
        }
        let budgets = Budgets::for_env(&env);
        let state = EpisodeState::new(&env, budgets, variant);
        let payload = json!({
            "env_id": env.id,
            "scenario": env.scenario,
            "question": env.question,
            "tool_documents": env.documents().iter().map(|d| d.to_schema_json()).collect::<Vec<_>>(),
            "system_context": render_system_context(&env.documents()),
            "budgets": budgets,
            "variant": variant,
        });
        session.episode = Some(Episode { env, state });
        Response::result(rid, sid, payload)
    }

    fn step(&self, session: &mut Session, req: &Request) -> Response {
        let rid = req.request_id.clone();
        let sid = req.session_id.clone();
        let Some(episode) = session.episode.as_mut() else {
            return Response::error(rid, sid, ErrorCode::NeedsReset, "no episode; send reset first");
        };
        if episode.state.done {
            return Response::error(rid, sid, ErrorCode::StepAfterDone, "episode is done; send reset");
        }
        let Some(text) = req.payload.get("assistant_text").and_then(Value::as_str) else {
            return Response::error(rid, sid, ErrorCode::BadRequest, "step needs payload.assistant_text");
        };
        let result = match episode.state.step(&episode.env, text) {
            Ok(r) => r,
            Err(e) => return Response::error(rid, sid, ErrorCode::StepAfterDone, e.to_string()),
        };
        let observation = if result.responses.is_empty() {
            Value::Null
        } else {
            Value::String(wrap_responses(&result.responses))
        };
        let mut payload = json!({
            "kind": result.kind,
            "tool_responses": result.responses,
            "observation": observation,
            "reward": result.reward,
            "stats": result.stats,
            "outcome": result.outcome,
            "done": result.done,
        });
        if result.done {
            let traj = episode.state.to_trajectory(&episode.env);
            payload["final_stats"] = json!(traj.summary());
            if let Some(store) = &self.store {
                if let Err(e) = store.append(&traj) {
                    log::error!("could not persist trajectory: {e}");
                }
            }
        }
        Response::result(rid, sid, payload)
    }

    /// Serves one connection until EOF, then closes its sessions.
    pub fn serve_stream<R: BufRead, W: Write>(&self, reader: R, mut writer: W) -> io::Result<()> {
        let mut owned = Vec::new();
        let mut result = Ok(());
        for line in reader.lines() {
            let line = match line {
                Ok(l) => l,
                Err(e) => {
                    result = Err(e);
                    break;
                }
            };
            if line.trim().is_empty() {
                continue;
            }
            let mut reply = self.handle_line(&line, &mut owned);
            reply.push('\n');
            if let Err(e) = writer.write_all(reply.as_bytes()).and_then(|_| writer.flush()) {
                result = Err(e);
                break;
            }
        }
        let mut sessions = self.sessions.lock().expect("session lock");
        for id in owned {
            sessions.remove(&id);
        }
        result
    }

    /// Accepts connections forever, one thread each.
    pub fn serve_tcp(self: Arc<Self>, listener: TcpListener) -> io::Result<()> {
        for stream in listener.incoming() {
            let stream = stream?;
            if let Err(e) = stream.set_nodelay(true) {
                log::debug!("set_nodelay: {e}");
            }
            let gym = Arc::clone(&self);
            std::thread::spawn(move || {
                let peer = stream.peer_addr().map(|a| a.to_string()).unwrap_or_default();
                log::debug!("connection from {peer}");
                let reader = match stream.try_clone() {
                    Ok(s) => BufReader::new(s),
                    Err(e) => {
                        log::error!("{peer}: {e}");
                        return;
                    }
                };
                if let Err(e) = gym.serve_stream(reader, stream) {
                    log::debug!("{peer}: {e}");
                }
            });
        }
        Ok(())
    }
}

fn parse_variant(payload: &Value, fallback: RewardVariant) -> Result<RewardVariant, String> {
    match payload.get("variant") {
        None | Some(Value::Null) => Ok(fallback),
        Some(Value::String(s)) => s.parse(),
        Some(other) => Err(format!("variant must be a string, got {other}")),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::pipeline::ScalingConfig;
    use crate::pipeline::ScenarioSeed;

    fn gym() -> Gym {
        let env = build_environment(
            &ScenarioSeed::new(ScenarioKind::SingleHop, 1, 3),
            &ScalingConfig::distractors(2),
            &mut SyntheticBackend,
        )
        .unwrap();
        Gym::new(vec![env], ServiceConfig::default())
    }

    fn send(g: &Gym, owned: &mut Vec<String>, v: Value) -> Response {
        serde_json::from_str(&g.handle_line(&v.to_string(), owned)).unwrap()
    }

    #[test]
    fn step_before_reset_needs_reset() {
        let g = gym();
        let mut owned = Vec::new();
        let hello = send(&g, &mut owned, json!({"op": "hello", "request_id": 1}));
        let sid = hello.session_id.clone().unwrap();
        let r = send(&g, &mut owned, json!({"op": "step", "request_id": 2, "session_id": sid, "payload": {"assistant_text": ""}}));
        assert_eq!(r.error_code(), Some(ErrorCode::NeedsReset));
        assert_eq!(r.request_id, json!(2));
    }

    #[test]
    fn unknown_op_and_garbage() {
        let g = gym();
        let mut owned = Vec::new();
        let r = send(&g, &mut owned, json!({"op": "dance", "request_id": "x"}));
        assert_eq!(r.error_code(), Some(ErrorCode::UnknownOp));
        let r: Response = serde_json::from_str(&g.handle_line("{not json", &mut owned)).unwrap();
        assert_eq!(r.error_code(), Some(ErrorCode::BadRequest));
    }

    #[test]
    fn session_limit() {
        let g = Gym::new(vec![], ServiceConfig { max_sessions: 1, ..ServiceConfig::default() });
        let mut owned = Vec::new();
        assert_eq!(send(&g, &mut owned, json!({"op": "hello", "request_id": 1})).op, ReplyOp::Result);
        let r = send(&g, &mut owned, json!({"op": "hello", "request_id": 2}));
        assert_eq!(r.error_code(), Some(ErrorCode::TooManySessions));
    }

    #[test]
    fn idle_sessions_expire() {
        let g = Gym::new(vec![], ServiceConfig { idle_timeout: Duration::ZERO, ..ServiceConfig::default() });
        let mut owned = Vec::new();
        let sid = send(&g, &mut owned, json!({"op": "hello", "request_id": 1})).session_id.unwrap();
        std::thread::sleep(Duration::from_millis(5));
        let r = send(&g, &mut owned, json!({"op": "reset", "request_id": 2, "session_id": sid, "payload": {"scenario": "single_hop"}}));
        assert_eq!(r.error_code(), Some(ErrorCode::UnknownSession));
    }

    #[test]
    fn silent_turn_over_the_wire() {
        let g = gym();
        let mut owned = Vec::new();
        let env_id = g.env_ids()[0].clone();
        let sid = send(&g, &mut owned, json!({"op": "hello", "request_id": 1})).session_id.unwrap();
        let reset = send(&g, &mut owned, json!({"op": "reset", "request_id": 2, "session_id": sid, "payload": {"env_id": env_id}}));
        assert_eq!(reset.payload["tool_documents"].as_array().unwrap().len(), 3);
        let step = send(&g, &mut owned, json!({"op": "step", "request_id": 3, "session_id": sid, "payload": {"assistant_text": ""}}));
        assert_eq!(step.payload["reward"], json!(-0.5));
        assert_eq!(step.payload["done"], json!(true));
        let again = send(&g, &mut owned, json!({"op": "step", "request_id": 3, "session_id": sid, "payload": {"assistant_text": ""}}));
        assert_eq!(again, step);
        let after = send(&g, &mut owned, json!({"op": "step", "request_id": 4, "session_id": sid, "payload": {"assistant_text": ""}}));
        assert_eq!(after.error_code(), Some(ErrorCode::StepAfterDone));
        let missing = send(&g, &mut owned, json!({"op": "reset", "request_id": 5, "session_id": sid, "payload": {"env_id": "nope"}}));
        assert_eq!(missing.error_code(), Some(ErrorCode::NotFound));
    }
}
