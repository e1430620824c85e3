//! Classifies assistant messages under the tool-call tag grammar.

use forge_gym::parse_assistant_message;

fn main() {
    let samples = [
        "<tool_call>\n{\"name\": \"capital_finder\", \"arguments\": {\"country\": \"Dunador\"}}\n</tool_call>",
        "<think>Two lookups at once.</think>\n<tool_call>\n{\"name\": \"a\", \"arguments\": {}}\n</tool_call>\n<tool_call>\n{\"name\": \"b\", \"arguments\": {\"x\": 1}}\n</tool_call>",
        "The final answer is: Marivdale",
        "",
        "<tool_call>\n{\"name\": \"a\", \"arguments\": {}\n</tool_call>",
        "<tool_call>\n{\"name\": \"a\", \"arguments\": {}}",
    ];
    for text in samples {
        let parsed = parse_assistant_message(text);
        let names: Vec<&str> = parsed.calls.iter().map(|c| c.name.as_str()).collect();
        println!("{:<13?} calls={names:?} detail={:?}", parsed.kind, parsed.error_detail);
    }
}
