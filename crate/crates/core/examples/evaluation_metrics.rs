//! Solve-P/R/F1, answer correctness, Pass^1 and the TS/PI/CF cascade on
//! small hand-made inputs.

use forge_gym::reward::{answer_correctness, pass_hat_1, solve_scores, ts_pi_cf};
use forge_gym::ToolCall;
use serde_json::json;

fn call(v: serde_json::Value) -> ToolCall {
    serde_json::from_value(v).unwrap()
}

fn main() {
    let s = solve_scores(5, 3, 4);
    println!("5 calls, 3 of 4 solved: P={:.3} R={:.3} F1={:.3}", s.precision, s.recall, s.f1);

    let gold = "Marivdale";
    for out in ["The final answer is: MARIVDALE.", "I could not find it."] {
        println!("AC({out:?}) = {}", answer_correctness(out, gold));
    }
    println!("Pass^1 with 37 of 50 correct = {:.2}", pass_hat_1(37, 50));

    let g = call(json!({"name": "capital_finder", "arguments": {"country": "Dunador"}}));
    for pred in [
        json!({"name": "capital_finder", "arguments": {"country": " dunador "}}),
        json!({"name": "capital_finder", "arguments": {"country": "Velmark"}}),
        json!({"name": "capital_finder", "arguments": {"nation": "Dunador"}}),
        json!({"name": "currency_lookup", "arguments": {"country": "Dunador"}}),
    ] {
        let c = ts_pi_cf(&call(pred.clone()), &g);
        println!("TS={} PI={} CF={}  {}", c.ts, c.pi, c.cf, pred);
    }
}
