//! Builds a bundle through the chat-completion backend. A canned model
//! stands in for the network; its exchanges are recorded and then replayed
//! to rebuild the identical bundle offline.

use forge_gym::pipeline::llm::{LlmBackend, ManualInput, RecordingClient, ReplayClient};
use forge_gym::{build_environment, ScalingConfig};
use serde_json::json;

fn canned_model(prompt: &str) -> Result<String, String> {
    let question = prompt
        .rsplit("**Question**: ")
        .next()
        .or_else(|| prompt.rsplit("- Input Problem: ").next())
        .unwrap_or_default();
    let reply = if prompt.starts_with("Identify the appropriate tool") {
        let (name, param) = if question.starts_with("Which country") {
            ("country_of_city", "city")
        } else {
            ("capital_finder", "country")
        };
        json!({"analysis": "lookup", "tool": {
            "name": name,
            "description": format!("Looks up a {param} relation."),
            "parameters": {"type": "object", "properties": {param: {"type": "string", "description": "Name."}}, "required": [param]}
        }})
    } else if prompt.starts_with("Analyze the relationship") {
        let call = if prompt.contains("def country_of_city") {
            "country_of_city(city=\"Velmora\")"
        } else {
            "capital_finder(country=\"Dunador\")"
        };
        json!({"analysis": "direct", "call": call})
    } else {
        json!({"analysis": "no overlap", "merged": null})
    };
    Ok(reply.to_string())
}

fn main() {
    let input: ManualInput = serde_json::from_value(json!({
        "scenario": "multi_hop",
        "question": "What is the capital of the country Velmora is in?",
        "answer": "Marivdale",
        "sub_questions": [
            {"id": "q1", "text": "Which country is Velmora in?", "answer": "Dunador"},
            {"id": "q2", "text": "What is the capital of Dunador?", "answer": "Marivdale", "depends_on": ["q1"]}
        ]
    }))
    .unwrap();
    let seed = input.seed(1);
    let cfg = ScalingConfig::distractors(2);

    let mut live = LlmBackend::new(RecordingClient::new(canned_model), input.clone());
    let first = build_environment(&seed, &cfg, &mut live).unwrap();
    let recording = live.into_client().log;
    println!("{} exchanges recorded; bundle {}", recording.len(), first.id);
    println!("q2 bindings: {}", serde_json::to_string(&first.sub_questions[1].canonical_bindings).unwrap());

    let mut replay = LlmBackend::new(ReplayClient::new(recording), input);
    let second = build_environment(&seed, &cfg, &mut replay).unwrap();
    println!("replayed bundle {} identical: {}", second.id, first == second);
}
