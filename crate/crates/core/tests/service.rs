//! The session service over real TCP and in-memory streams.

use std::io::Cursor;
use std::net::{SocketAddr, TcpListener};
use std::sync::Arc;
use std::time::Duration;

use forge_gym::engine::{Agent, AgentKind};
use forge_gym::pipeline::presets::preset_seed;
use forge_gym::service::{ClientError, ErrorCode, Gym, GymClient, ReplyOp, Request, Response, ServiceConfig};
use forge_gym::store::{read_all, EpisodeSummary, TrajectoryStore};
use forge_gym::{
    build_environment, run_episode, Budgets, EnvironmentBundle, RewardVariant, ScenarioKind, ScriptedAgent,
    SyntheticBackend, TurnStats,
};
use serde_json::{json, Value};

fn bundles() -> Vec<EnvironmentBundle> {
    ScenarioKind::ALL
        .into_iter()
        .map(|s| {
            let (seed, cfg) = preset_seed(s, 40);
            build_environment(&seed, &cfg, &mut SyntheticBackend).unwrap()
        })
        .collect()
}

fn spawn(gym: Gym) -> SocketAddr {
    let listener = TcpListener::bind("127.0.0.1:0").unwrap();
    let addr = listener.local_addr().unwrap();
    let gym = Arc::new(gym);
    std::thread::spawn(move || gym.serve_tcp(listener));
    addr
}

fn service_code(e: ClientError) -> ErrorCode {
    match e {
        ClientError::Service { code, .. } => code,
        other => panic!("expected a service error, got {other}"),
    }
}

#[test]
fn loopback_matches_in_process_for_every_agent_and_variant() {
    let envs = bundles();
    let addr = spawn(Gym::new(envs.clone(), ServiceConfig::default()));
    let mut client = GymClient::connect(addr).unwrap();
    for variant in RewardVariant::ALL {
        client.hello(Some(variant.as_str())).unwrap();
        for env in &envs {
            let budgets = Budgets::for_env(env);
            for kind in AgentKind::ALL {
                let mut local = ScriptedAgent::new(kind, env, budgets);
                let expected = run_episode(env, &mut local, budgets, variant).unwrap();

                let obs = client.reset_env(&env.id).unwrap();
                assert_eq!(obs["variant"], variant.as_str());
                let mut remote = ScriptedAgent::new(kind, env, budgets);
                let mut stats = Vec::new();
                let mut rewards = Vec::new();
                let final_stats = loop {
                    let r = client.step(&remote.act(&[]).unwrap()).unwrap();
                    stats.push(serde_json::from_value::<TurnStats>(r["stats"].clone()).unwrap());
                    rewards.push(r["reward"].as_f64().unwrap());
                    if r["done"].as_bool().unwrap() {
                        break serde_json::from_value::<EpisodeSummary>(r["final_stats"].clone()).unwrap();
                    }
                };
                let local_stats: Vec<TurnStats> = expected.per_turn.iter().map(|t| t.stats).collect();
                assert_eq!(stats, local_stats, "{kind} on {}", env.id);
                assert_eq!(rewards, expected.rewards(), "{kind} on {}", env.id);
                assert_eq!(final_stats, expected.summary());
            }
        }
        client.close().unwrap();
    }
}

#[test]
fn interleaved_sessions_stay_isolated() {
    let envs = bundles();
    let addr = spawn(Gym::new(envs.clone(), ServiceConfig::default()));
    let (a_env, b_env) = (&envs[2], &envs[3]);
    let mut a = GymClient::connect(addr).unwrap();
    let mut b = GymClient::connect(addr).unwrap();
    a.hello(None).unwrap();
    b.hello(None).unwrap();
    assert_ne!(a.session_id(), b.session_id());
    a.reset_env(&a_env.id).unwrap();
    b.reset_env(&b_env.id).unwrap();

    let mut agents = [
        ScriptedAgent::new(AgentKind::Oracle, a_env, Budgets::for_env(a_env)),
        ScriptedAgent::new(AgentKind::Spammer, b_env, Budgets::for_env(b_env)),
    ];
    let mut finals: [Option<Value>; 2] = [None, None];
    while finals.iter().any(Option::is_none) {
        for (i, client) in [&mut a, &mut b].into_iter().enumerate() {
            if finals[i].is_some() {
                continue;
            }
            let r = client.step(&agents[i].act(&[]).unwrap()).unwrap();
            if r["done"].as_bool().unwrap() {
                finals[i] = Some(r["final_stats"].clone());
            }
        }
    }
    let [fa, fb] = finals.map(Option::unwrap);
    assert_eq!(fa["solve_f1"], 1.0);
    assert_eq!(fa["q_total"], a_env.sub_questions.len());
    assert_eq!(fb["solve_p"], 0.5);
    assert_eq!(fb["q_total"], b_env.sub_questions.len());
}

#[test]
fn resent_step_returns_the_cached_reply() {
    let envs = bundles();
    let env = &envs[1];
    let addr = spawn(Gym::new(envs.clone(), ServiceConfig::default()));
    let mut client = GymClient::connect(addr).unwrap();
    client.hello(None).unwrap();
    client.reset_env(&env.id).unwrap();
    let sid = client.session_id().unwrap().to_string();

    let mut oracle = ScriptedAgent::new(AgentKind::Oracle, env, Budgets::for_env(env));
    let text = oracle.act(&[]).unwrap();
    let req = Request::new("step", "r-1", Some(&sid), json!({"assistant_text": text}));
    let first = client.send(&req).unwrap();
    let second = client.send(&req).unwrap();
    assert_eq!(first, second);
    assert_eq!(first.payload["stats"]["t"], 0);

    // Executing the same calls again would leave q at 0 for this turn.
    let again = client
        .send(&Request::new("step", "r-2", Some(&sid), json!({"assistant_text": "The final answer is: x"})))
        .unwrap();
    assert_eq!(again.op, ReplyOp::Result);
    assert_eq!(again.payload["final_stats"]["p_total"], first.payload["stats"]["p"]);
}

#[test]
fn error_codes_are_in_band() {
    let envs = bundles();
    let addr = spawn(Gym::new(
        envs.clone(),
        ServiceConfig {
            max_sessions: 1,
            ..ServiceConfig::default()
        },
    ));
    let mut client = GymClient::connect(addr).unwrap();

    let unknown = client.send(&Request::new("step", 1, Some("nope"), json!({"assistant_text": ""}))).unwrap();
    assert_eq!(unknown.error_code(), Some(ErrorCode::UnknownSession));
    let bad_op = client.send(&Request::new("jump", 2, None, json!({}))).unwrap();
    assert_eq!(bad_op.error_code(), Some(ErrorCode::UnknownOp));

    client.hello(None).unwrap();
    assert_eq!(service_code(client.step("hi").unwrap_err()), ErrorCode::NeedsReset);
    assert_eq!(service_code(client.reset_env("missing").unwrap_err()), ErrorCode::NotFound);
    assert_eq!(service_code(client.reset_scenario("five_hop", 1).unwrap_err()), ErrorCode::NotFound);

    let mut other = GymClient::connect(addr).unwrap();
    assert_eq!(service_code(other.hello(None).unwrap_err()), ErrorCode::TooManySessions);

    client.reset_env(&envs[0].id).unwrap();
    let r = client.step("").unwrap();
    assert_eq!(r["reward"], -0.5);
    assert_eq!(r["done"], true);
    assert_eq!(service_code(client.step("again").unwrap_err()), ErrorCode::StepAfterDone);

    client.close().unwrap();
    other.hello(None).unwrap();
}

#[test]
fn reset_by_scenario_builds_the_preset_bundle() {
    let addr = spawn(Gym::new(Vec::new(), ServiceConfig::default()));
    let mut client = GymClient::connect(addr).unwrap();
    client.hello(None).unwrap();
    let obs = client.reset_scenario("single_hop", 7).unwrap();
    let (seed, cfg) = preset_seed(ScenarioKind::SingleHop, 7);
    let env = build_environment(&seed, &cfg, &mut SyntheticBackend).unwrap();
    assert_eq!(obs["env_id"], env.id);
    assert_eq!(obs["question"], env.question);
    assert_eq!(obs["tool_documents"].as_array().unwrap().len(), env.tools.len());
    assert_eq!(obs["budgets"]["max_turns"], 4);

    let again = client.reset_scenario("single_hop", 7).unwrap();
    assert_eq!(again["env_id"], obs["env_id"]);
    let by_id = client.reset_env(&env.id).unwrap();
    assert_eq!(by_id["env_id"], obs["env_id"]);
}

#[test]
fn stdio_stream_drives_an_episode_and_persists_it() {
    let envs = bundles();
    let env = &envs[0];
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("epoch-1.jsonl");
    let gym = Gym::new(envs.clone(), ServiceConfig::default()).with_store(TrajectoryStore::open(&path).unwrap());

    let mut oracle = ScriptedAgent::new(AgentKind::Oracle, env, Budgets::for_env(env));
    let lines = [
        json!({"op": "hello", "request_id": 1, "payload": {}}),
        json!({"op": "reset", "request_id": 2, "session_id": "s1", "payload": {"env_id": env.id}}),
        json!({"op": "step", "request_id": 3, "session_id": "s1", "payload": {"assistant_text": oracle.act(&[]).unwrap()}}),
        json!({"op": "step", "request_id": 4, "session_id": "s1", "payload": {"assistant_text": oracle.act(&[]).unwrap()}}),
    ];
    let mut input: String = lines.iter().map(|l| format!("{l}\n")).collect();
    input.push_str("this is not json\n");
    let mut output = Vec::new();
    gym.serve_stream(Cursor::new(input), &mut output).unwrap();

    let replies: Vec<Response> = String::from_utf8(output)
        .unwrap()
        .lines()
        .map(|l| serde_json::from_str(l).unwrap())
        .collect();
    assert_eq!(replies.len(), 5);
    assert_eq!(replies[0].payload["protocol"], "gym-line/1");
    assert_eq!(replies[2].payload["reward"], 1.0);
    assert_eq!(replies[3].payload["done"], true);
    assert_eq!(replies[3].payload["final_stats"]["solve_f1"], 1.0);
    assert_eq!(replies[4].error_code(), Some(ErrorCode::BadRequest));
    assert_eq!(gym.session_count(), 0);

    let stored = read_all(&path).unwrap();
    assert_eq!(stored.records.len(), 1);
    assert_eq!(stored.records[0].1.env_id, env.id);
}

#[test]
fn idle_sessions_are_reaped() {
    let gym = Gym::new(
        bundles(),
        ServiceConfig {
            max_sessions: 1,
            idle_timeout: Duration::from_millis(20),
            ..ServiceConfig::default()
        },
    );
    let mut owned = Vec::new();
    let first = gym.handle_line(r#"{"op":"hello","request_id":1,"payload":{}}"#, &mut owned);
    assert!(first.contains("\"result\""));
    std::thread::sleep(Duration::from_millis(50));
    let mut other = Vec::new();
    let second = gym.handle_line(r#"{"op":"hello","request_id":1,"payload":{}}"#, &mut other);
    assert!(second.contains("\"result\""), "{second}");
    assert_eq!(gym.session_count(), 1);
}
