//! Starts the session service on an ephemeral port and drives the oracle
//! through it over TCP.

use std::net::TcpListener;
use std::sync::Arc;

use forge_gym::engine::{Agent, AgentKind};
use forge_gym::pipeline::presets::preset_seed;
use forge_gym::service::{Gym, GymClient, ServiceConfig};
use forge_gym::{build_environment, Budgets, ScenarioKind, ScriptedAgent, SyntheticBackend};

fn main() {
    let (seed, cfg) = preset_seed(ScenarioKind::MultiHop, 21);
    let env = build_environment(&seed, &cfg, &mut SyntheticBackend).unwrap();
    let gym = Arc::new(Gym::new(vec![env.clone()], ServiceConfig::default()));
    let listener = TcpListener::bind("127.0.0.1:0").unwrap();
    let addr = listener.local_addr().unwrap();
    std::thread::spawn(move || gym.serve_tcp(listener));

    let mut client = GymClient::connect(addr).unwrap();
    let hello = client.hello(None).unwrap();
    println!("session {} ({})", hello["session_id"], hello["protocol"]);
    let obs = client.reset_env(&env.id).unwrap();
    println!("question: {}", obs["question"]);

    let mut agent = ScriptedAgent::new(AgentKind::Oracle, &env, Budgets::for_env(&env));
    loop {
        let text = agent.act(&[]).unwrap();
        let result = client.step(&text).unwrap();
        println!("reward {:>6.3} done {}", result["reward"].as_f64().unwrap(), result["done"]);
        if result["done"].as_bool().unwrap() {
            println!("final stats {}", result["final_stats"]);
            break;
        }
    }
    client.close().unwrap();
}
