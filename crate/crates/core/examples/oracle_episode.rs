//! Runs the scripted oracle on a parallel multi-hop bundle and prints the
//! transcript with per-turn rewards.

use forge_gym::engine::AgentKind;
use forge_gym::pipeline::presets::preset_seed;
use forge_gym::{build_environment, run_episode, Budgets, RewardVariant, Role, ScenarioKind, ScriptedAgent, SyntheticBackend};

fn main() {
    let (seed, cfg) = preset_seed(ScenarioKind::ParallelMultiHop, 3);
    let env = build_environment(&seed, &cfg, &mut SyntheticBackend).unwrap();
    let budgets = Budgets::for_env(&env);
    let mut agent = ScriptedAgent::new(AgentKind::Oracle, &env, budgets);
    let traj = run_episode(&env, &mut agent, budgets, RewardVariant::Balanced).unwrap();

    let mut turn = 0;
    for m in traj.transcript.iter().skip(1) {
        match m.role {
            Role::Assistant => {
                let rec = traj.per_turn[turn];
                turn += 1;
                println!("--- assistant turn {turn} (p={} q={} t={} reward={:.3})", rec.stats.p, rec.stats.q, rec.stats.t, rec.reward);
                println!("{}", m.content);
            }
            role => println!("--- {role:?}\n{}", m.content),
        }
    }
    let s = traj.summary();
    println!("\nSolve-P {:.3}  Solve-R {:.3}  Solve-F1 {:.3}  AC {}", s.solve_p, s.solve_r, s.solve_f1, s.ac);
}
