//! Construction pipeline: custom backends, deployment and scaling
//! invariants over preset bundles.

use std::collections::{BTreeMap, BTreeSet};

use forge_gym::engine::AgentKind;
use forge_gym::model::validate_bundle;
use forge_gym::normalize::fold_text;
use forge_gym::pipeline::presets::{preset_seed, test_split};
use forge_gym::pipeline::{
    build_environment, deploy, GeneratedDocs, GenerationBackend, PipelineError, ScalingConfig, ScenarioSeed,
};
use forge_gym::runtime::{invoke, NoAnswers};
use forge_gym::{
    run_episode, Budgets, EnvironmentBundle, Literal, ParameterSpec, RewardVariant, ScenarioKind, ScriptedAgent,
    SubQuestion, SyntheticBackend, ToolCall, ToolDocument, ValueKind, ViolationCode,
};
use serde_json::{json, Map, Value};

fn distance_doc() -> ToolDocument {
    ToolDocument::new("distance_calculator", "Calculates the distance between two locations.")
        .param(ParameterSpec::new("origin", ValueKind::String, "Start address.").required())
        .param(ParameterSpec::new("destination", ValueKind::String, "End address.").required())
        .param(
            ParameterSpec::new("mode", ValueKind::String, "Mode of transport.")
                .with_enum(["walking", "biking", "driving", "public_transport"])
                .required(),
        )
}

fn subq(id: &str, tool: &str, answer: &str, bindings: &[(&str, Literal)]) -> SubQuestion {
    SubQuestion {
        id: id.into(),
        text: format!("Question {id}?"),
        answer: answer.into(),
        depends_on: Vec::new(),
        tool_name: tool.into(),
        canonical_bindings: bindings.iter().map(|(k, v)| (k.to_string(), v.clone())).collect(),
    }
}

fn args(v: Value) -> Map<String, Value> {
    v.as_object().unwrap().clone()
}

fn oracle_f1(env: &EnvironmentBundle) -> f64 {
    let budgets = Budgets::for_env(env);
    let mut agent = ScriptedAgent::new(AgentKind::Oracle, env, budgets);
    run_episode(env, &mut agent, budgets, RewardVariant::Balanced)
        .unwrap()
        .summary()
        .solve_f1
}

#[test]
fn deployed_distance_tool_answers_and_rejects() {
    let doc = distance_doc();
    let q = subq(
        "q1",
        "distance_calculator",
        "4.2 km",
        &[
            ("origin", Literal::string("8 Oceanside Road")),
            ("destination", Literal::string("Harbor Station")),
            ("mode", Literal::string("walking")),
        ],
    );
    let behavior = deploy(&doc, &[(&q, "4.2 km")]).unwrap();
    let call = ToolCall::new(
        "distance_calculator",
        args(json!({"origin": "8 oceanside road", "destination": "Harbor Station", "mode": "walking"})),
    );
    let resp = invoke(&behavior, &doc, &call, &NoAnswers);
    assert!(resp.is_success());
    assert!(resp.payload.contains("4.2 km"));

    let teleport = subq(
        "q1",
        "distance_calculator",
        "0 km",
        &[
            ("origin", Literal::string("A")),
            ("destination", Literal::string("B")),
            ("mode", Literal::string("teleport")),
        ],
    );
    let err = deploy(&doc, &[(&teleport, "0 km")]).unwrap_err();
    assert_eq!(err.code(), "BINDING_TYPE_MISMATCH");

    let empty = deploy(&doc, &[]).unwrap();
    assert!(empty.success_table.is_empty());
    let resp = invoke(&empty, &doc, &call, &NoAnswers);
    assert_eq!(resp.code, Some(ViolationCode::NoMatch));
}

/// A hand-written backend: one weather lookup keyed by `location`.
struct Weather;

impl GenerationBackend for Weather {
    fn generate_documents(&mut self, _seed: &ScenarioSeed) -> Result<GeneratedDocs, PipelineError> {
        let doc = ToolDocument::new("weather_lookup", "Current weather for a location.")
            .param(ParameterSpec::new("location", ValueKind::String, "City name.").required());
        Ok(GeneratedDocs {
            question: "What is the weather in Paris?".into(),
            final_answer: "light rain".into(),
            sub_questions: vec![subq("q1", "weather_lookup", "light rain", &[("location", Literal::string("Paris"))])],
            documents: vec![doc],
        })
    }
}

#[test]
fn type_generalization_wraps_bindings_and_keeps_solvability() {
    let mut seen = BTreeSet::new();
    for rng_seed in 0..16 {
        let cfg = ScalingConfig {
            type_generalization: 1.0,
            rng_seed,
            ..ScalingConfig::default()
        };
        let env = build_environment(&ScenarioSeed::new(ScenarioKind::SingleHop, 1, rng_seed), &cfg, &mut Weather).unwrap();
        let param = env.tools[0].document.parameter("location").unwrap().clone();
        let binding = env.sub_questions[0].canonical_bindings["location"].to_value();
        match param.kind() {
            ValueKind::Array => assert_eq!(binding, json!(["Paris"])),
            ValueKind::Object => assert_eq!(binding, json!({"value": "Paris"})),
            other => panic!("location stayed {other:?}"),
        }
        seen.insert(param.kind().as_str());
        assert_eq!(oracle_f1(&env), 1.0);
    }
    assert_eq!(seen.len(), 2, "both wrappers occur: {seen:?}");
}

#[test]
fn extension_adds_exactly_k_tools() {
    for k in [0, 3, 9] {
        let seed = ScenarioSeed::new(ScenarioKind::MultiHop, 4, 12);
        let base = build_environment(&seed, &ScalingConfig::default(), &mut SyntheticBackend).unwrap();
        let scaled = build_environment(&seed, &ScalingConfig::distractors(k), &mut SyntheticBackend).unwrap();
        assert_eq!(scaled.tools.len(), base.tools.len() + k);
        assert_eq!(scaled.sub_questions, base.sub_questions);
        assert_eq!(scaled.distractors.len(), k);
    }
}

#[test]
fn expansion_keeps_required_sets() {
    let seed = ScenarioSeed::new(ScenarioKind::ParallelMultiHop, 6, 5);
    let base = build_environment(&seed, &ScalingConfig::default(), &mut SyntheticBackend).unwrap();
    let cfg = ScalingConfig {
        parameter_expansion: 2,
        ..ScalingConfig::default()
    };
    let scaled = build_environment(&seed, &cfg, &mut SyntheticBackend).unwrap();
    for t in &base.tools {
        let after = scaled.tool(&t.document.name).unwrap();
        assert_eq!(after.document.required_names(), t.document.required_names());
        assert!(after.document.parameters.len() <= t.document.parameters.len() + 2);
    }
    assert_eq!(oracle_f1(&scaled), 1.0);
}

#[test]
fn scaling_invariants_hold_on_preset_splits() {
    for scenario in ScenarioKind::ALL {
        for (seed, cfg) in test_split(scenario, 25, 99) {
            let base = build_environment(&seed, &ScalingConfig::default(), &mut SyntheticBackend).unwrap();
            let env = build_environment(&seed, &cfg, &mut SyntheticBackend).unwrap();
            assert!(validate_bundle(&env).is_empty());

            let essential: BTreeSet<&str> = env.sub_questions.iter().map(|q| q.tool_name.as_str()).collect();
            assert!(essential.len() <= env.sub_questions.len(), "m <= n");
            assert_eq!(env.tools.len(), essential.len() + env.distractors.len());
            let before: BTreeSet<&str> = base.tools.iter().map(|t| t.document.name.as_str()).collect();
            let after: BTreeSet<&str> = env.tools.iter().map(|t| t.document.name.as_str()).collect();
            assert!(before.is_subset(&after), "scaling never removes a tool");

            let answers: Vec<String> = env.sub_questions.iter().map(|q| fold_text(&q.answer)).collect();
            for name in &env.distractors {
                let t = env.tool(name).unwrap();
                assert!(t.behavior.success_table.is_empty());
                assert!(!essential.contains(name.as_str()));
                let texts = t
                    .behavior
                    .fallback_error_templates
                    .values()
                    .chain(std::iter::once(&t.document.description));
                for text in texts {
                    let folded = fold_text(text);
                    for a in &answers {
                        assert!(!folded.contains(a.as_str()), "{name} leaks answer {a}");
                    }
                }
            }
        }
    }
}

#[test]
fn parallel_multi_hop_with_seven_questions_reaches_eleven_tools() {
    let mut sizes = Vec::new();
    for s in 0..20 {
        let (_, cfg) = preset_seed(ScenarioKind::ParallelMultiHop, s);
        let env = build_environment(&ScenarioSeed::new(ScenarioKind::ParallelMultiHop, 7, s), &cfg, &mut SyntheticBackend).unwrap();
        sizes.push(env.tools.len() as f64);
    }
    let avg = sizes.iter().sum::<f64>() / sizes.len() as f64;
    assert!((avg - 11.26).abs() <= 1.5, "average toolset {avg}");
}

#[test]
fn same_seed_and_config_give_identical_bytes() {
    let (seed, cfg) = preset_seed(ScenarioKind::MultiHop, 42);
    let a = build_environment(&seed, &cfg, &mut SyntheticBackend).unwrap();
    let b = build_environment(&seed, &cfg, &mut SyntheticBackend).unwrap();
    assert_eq!(a.id, b.id);
    assert_eq!(a.to_json_pretty(), b.to_json_pretty());
    let other = build_environment(&ScenarioSeed { rng_seed: 43, ..seed }, &cfg, &mut SyntheticBackend).unwrap();
    assert_ne!(other.id, a.id);
}

#[test]
fn multi_hop_bindings_reference_their_predecessor() {
    let env = build_environment(&ScenarioSeed::new(ScenarioKind::MultiHop, 3, 8), &ScalingConfig::default(), &mut SyntheticBackend).unwrap();
    let refs: BTreeMap<&str, Vec<&str>> = env.sub_questions.iter().map(|q| (q.id.as_str(), q.referenced_ids())).collect();
    assert_eq!(refs["q2"], vec!["q1"]);
    assert_eq!(refs["q3"], vec!["q2"]);
}

#[test]
fn a_backend_with_a_bad_binding_fails_at_deploy() {
    struct Broken;
    impl GenerationBackend for Broken {
        fn generate_documents(&mut self, s: &ScenarioSeed) -> Result<GeneratedDocs, PipelineError> {
            let mut docs = Weather.generate_documents(s)?;
            docs.sub_questions[0].canonical_bindings.insert("location".into(), Literal::integer(3));
            Ok(docs)
        }
    }
    let err = build_environment(&ScenarioSeed::new(ScenarioKind::SingleHop, 1, 0), &ScalingConfig::default(), &mut Broken).unwrap_err();
    assert_eq!(err.code(), "BINDING_TYPE_MISMATCH");
    assert!(err.to_string().starts_with("deploy"), "{err}");
}
