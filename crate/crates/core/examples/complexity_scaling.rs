//! Applies each scaling strategy in turn to one bundle and shows how the
//! toolset changes while the oracle keeps solving it.

use forge_gym::engine::AgentKind;
use forge_gym::pipeline::{scale_complexity, DistractorCatalog};
use forge_gym::{build_environment, run_episode, Budgets, EnvironmentBundle, RewardVariant, ScalingConfig, ScenarioKind, ScenarioSeed, ScriptedAgent, SyntheticBackend};

fn oracle_f1(env: &EnvironmentBundle) -> f64 {
    let budgets = Budgets::for_env(env);
    let mut agent = ScriptedAgent::new(AgentKind::Oracle, env, budgets);
    run_episode(env, &mut agent, budgets, RewardVariant::Balanced).unwrap().summary().solve_f1
}

fn describe(label: &str, env: &EnvironmentBundle) {
    println!("{label}: {} tools, oracle F1 {:.1}", env.tools.len(), oracle_f1(env));
    for t in &env.tools {
        println!("  {}", serde_json::to_string(&t.document.to_schema_json()["parameters"]["properties"]).unwrap());
    }
}

fn main() {
    let seed = ScenarioSeed::new(ScenarioKind::ParallelSingleHop, 2, 8);
    let base = build_environment(&seed, &ScalingConfig::default(), &mut SyntheticBackend).unwrap();
    describe("base", &base);
    let catalog = DistractorCatalog::builtin();
    let steps = [
        ("parameter expansion (max 3)", ScalingConfig { parameter_expansion: 3, rng_seed: 1, ..ScalingConfig::default() }),
        ("type generalization (p=1)", ScalingConfig { type_generalization: 1.0, rng_seed: 1, ..ScalingConfig::default() }),
        ("toolset extension (k=4)", ScalingConfig::distractors(4)),
    ];
    for (label, cfg) in steps {
        let scaled = scale_complexity(&base, &cfg, &catalog, &mut SyntheticBackend).unwrap();
        describe(label, &scaled);
    }
}
