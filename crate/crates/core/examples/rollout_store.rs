//! Collects rollouts into an epoch file, reads them back and derives the
//! next epoch's resampling manifest.

use forge_gym::engine::AgentKind;
use forge_gym::pipeline::presets::test_split;
use forge_gym::store::{read_all, resample_manifest, RolloutLayout};
use forge_gym::{build_environment, run_episode, Budgets, RewardVariant, ScenarioKind, ScriptedAgent, SyntheticBackend};

fn main() {
    let dir = std::env::temp_dir().join(format!("gym-rollouts-{}", std::process::id()));
    let layout = RolloutLayout::new(&dir);
    let store = layout.open_epoch(1).unwrap();

    let mut ids = Vec::new();
    for (seed, cfg) in test_split(ScenarioKind::MultiHop, 3, 9) {
        let env = build_environment(&seed, &cfg, &mut SyntheticBackend).unwrap();
        for kind in [AgentKind::Oracle, AgentKind::Spammer, AgentKind::Guesser] {
            let budgets = Budgets::for_env(&env);
            let mut agent = ScriptedAgent::new(kind, &env, budgets);
            let mut traj = run_episode(&env, &mut agent, budgets, RewardVariant::Balanced).unwrap();
            traj.epoch = 1;
            let receipt = store.append(&traj).unwrap();
            println!("offset {} {} {:<8} rewards {:?}", receipt.offset, env.id, kind.as_str(), traj.rewards());
        }
        ids.push(env.id);
    }

    let read = read_all(layout.epoch_path(1)).unwrap();
    println!("read back {} records, {} corrupt", read.records.len(), read.errors.len());
    let manifest = resample_manifest(2, &ids, 7).unwrap();
    for e in &manifest.entries {
        println!("epoch 2: {} seed {}", e.env_id, e.episode_seed);
    }
    std::fs::remove_dir_all(dir).ok();
}
