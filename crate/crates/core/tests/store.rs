//! Trajectory persistence: offsets, round trips, corruption and manifests.

use std::fs::{self, OpenOptions};
use std::io::Write;

use forge_gym::engine::AgentKind;
use forge_gym::pipeline::presets::preset_seed;
use forge_gym::store::{read_all, resample_manifest, RolloutLayout, StoreError, Trajectory, TrajectoryStore};
use forge_gym::{build_environment, run_episode, Budgets, RewardVariant, ScenarioKind, ScriptedAgent, SyntheticBackend};

fn trajectories() -> Vec<Trajectory> {
    let (seed, cfg) = preset_seed(ScenarioKind::ParallelSingleHop, 6);
    let env = build_environment(&seed, &cfg, &mut SyntheticBackend).unwrap();
    let budgets = Budgets::for_env(&env);
    [AgentKind::Oracle, AgentKind::Spammer, AgentKind::Guesser]
        .into_iter()
        .map(|k| {
            let mut agent = ScriptedAgent::new(k, &env, budgets);
            run_episode(&env, &mut agent, budgets, RewardVariant::SolvePR).unwrap()
        })
        .collect()
}

#[test]
fn appends_get_consecutive_offsets_and_round_trip() {
    let dir = tempfile::tempdir().unwrap();
    let layout = RolloutLayout::new(dir.path().join("rollouts"));
    let store = layout.open_epoch(1).unwrap();
    let trajs = trajectories();
    let offsets: Vec<u64> = trajs.iter().map(|t| store.append(t).unwrap().offset).collect();
    assert_eq!(offsets, vec![0, 1, 2]);

    let read = read_all(layout.epoch_path(1)).unwrap();
    assert!(read.errors.is_empty());
    let back: Vec<Trajectory> = read.records.into_iter().map(|(_, t)| t).collect();
    assert_eq!(back, trajs);

    drop(store);
    let reopened = layout.open_epoch(1).unwrap();
    assert_eq!(reopened.append(&trajs[0]).unwrap().offset, 3);
}

#[test]
fn corrupt_lines_are_reported_and_skipped() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("epoch-1.jsonl");
    let store = TrajectoryStore::open(&path).unwrap();
    let trajs = trajectories();
    store.append(&trajs[0]).unwrap();
    {
        let mut f = OpenOptions::new().append(true).open(&path).unwrap();
        writeln!(f, "{{\"env_id\": \"half a rec").unwrap();
    }
    drop(store);
    let store = TrajectoryStore::open(&path).unwrap();
    assert_eq!(store.append(&trajs[1]).unwrap().offset, 2);

    let read = read_all(&path).unwrap();
    assert_eq!(read.errors.len(), 1);
    assert_eq!(read.errors[0].offset, 1);
    assert!(!read.errors[0].error.is_empty());
    let offsets: Vec<u64> = read.records.iter().map(|(o, _)| *o).collect();
    assert_eq!(offsets, vec![0, 2]);
    assert_eq!(read.records[1].1, trajs[1]);
}

#[test]
fn inconsistent_trajectories_are_refused() {
    let dir = tempfile::tempdir().unwrap();
    let store = TrajectoryStore::open(dir.path().join("x.jsonl")).unwrap();
    let mut t = trajectories().remove(0);
    t.per_turn.pop();
    assert!(matches!(store.append(&t), Err(StoreError::Invalid(_))));
    assert_eq!(fs::read_to_string(store.path()).unwrap(), "");
}

#[test]
fn manifests_are_seeded_permutations() {
    let ids: Vec<String> = (0..12).map(|i| format!("env-{i}")).collect();
    let a = resample_manifest(1, &ids, 7).unwrap();
    assert_eq!(a, resample_manifest(1, &ids, 7).unwrap());
    let b = resample_manifest(2, &ids, 7).unwrap();
    let order = |m: &forge_gym::store::Manifest| m.entries.iter().map(|e| e.env_id.clone()).collect::<Vec<_>>();
    assert_ne!(order(&a), order(&b));
    let mut sorted = order(&a);
    sorted.sort();
    let mut expected = ids.clone();
    expected.sort();
    assert_eq!(sorted, expected);
    assert!(resample_manifest(3, &[], 7).unwrap().entries.is_empty());
    assert!(matches!(resample_manifest(0, &ids, 7), Err(StoreError::InvalidEpoch(0))));
}
