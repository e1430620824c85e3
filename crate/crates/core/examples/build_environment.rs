//! Builds one bundle per scenario with the synthetic backend and prints its
//! question, sub-questions and toolset.
//!
//!     cargo run --example build_environment -- 42

use forge_gym::pipeline::presets::preset_seed;
use forge_gym::model::validate_bundle;
use forge_gym::{build_environment, ScenarioKind, SyntheticBackend};

fn main() {
    let seed: u64 = std::env::args().nth(1).and_then(|s| s.parse().ok()).unwrap_or(42);
    for scenario in ScenarioKind::ALL {
        let (s, cfg) = preset_seed(scenario, seed);
        let env = build_environment(&s, &cfg, &mut SyntheticBackend).expect("synthetic build");
        println!("== {} ({} sub-questions, {} tools)", env.id, env.sub_questions.len(), env.tools.len());
        println!("question: {}", env.question);
        println!("answer:   {}", env.final_answer);
        for q in &env.sub_questions {
            let deps = if q.depends_on.is_empty() { String::new() } else { format!(" after {}", q.depends_on.join(",")) };
            println!("  {} [{}{}] {} -> {}", q.id, q.tool_name, deps, q.text, q.answer);
        }
        let distractors = env.distractors.join(", ");
        println!("  distractors: {distractors}");
        println!("  valid: {}\n", validate_bundle(&env).is_empty());
    }
}
