//! Generates a test split per scenario with the documented presets and
//! prints average sub-question and toolset sizes next to the targets.
//!
//!     cargo run --example split_statistics -- 100

use forge_gym::pipeline::presets::{table_targets, test_split};
use forge_gym::{build_environment, ScenarioKind, SyntheticBackend};

fn main() {
    let count: usize = std::env::args().nth(1).and_then(|s| s.parse().ok()).unwrap_or(100);
    println!("{:<22} {:>8} {:>8} {:>8} {:>8}", "scenario", "sub-qs", "target", "tools", "target");
    for scenario in ScenarioKind::ALL {
        let (mut subqs, mut tools) = (0usize, 0usize);
        for (seed, cfg) in test_split(scenario, count, 2025) {
            let env = build_environment(&seed, &cfg, &mut SyntheticBackend).expect("preset builds");
            subqs += env.sub_questions.len();
            tools += env.tools.len();
        }
        let (tq, tt) = table_targets(scenario);
        println!(
            "{:<22} {:>8.2} {:>8.2} {:>8.2} {:>8.2}",
            scenario.as_str(),
            subqs as f64 / count as f64,
            tq,
            tools as f64 / count as f64,
            tt
        );
    }
}
