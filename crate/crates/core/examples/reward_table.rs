//! Prints the step reward of representative turns under every variant.

use forge_gym::reward::turn_reward;
use forge_gym::{RewardVariant, TurnKind, TurnStats};

fn main() {
    let rows = [
        ("3 calls, 2 solved", TurnStats { p: 3, q: 2, t: 1, o_kind: TurnKind::ToolCalls, final_contains_answer: false }),
        ("4 calls, 1 solved", TurnStats { p: 4, q: 1, t: 2, o_kind: TurnKind::ToolCalls, final_contains_answer: false }),
        ("1 call, nothing solved", TurnStats { p: 1, q: 0, t: 2, o_kind: TurnKind::ToolCalls, final_contains_answer: false }),
        ("empty reply", TurnStats { p: 0, q: 0, t: 2, o_kind: TurnKind::Empty, final_contains_answer: false }),
        ("broken tags", TurnStats { p: 0, q: 0, t: 2, o_kind: TurnKind::FormatError, final_contains_answer: false }),
        ("answer, 2 unsolved", TurnStats { p: 0, q: 0, t: 2, o_kind: TurnKind::FinalAnswer, final_contains_answer: true }),
        ("wrong answer, all solved", TurnStats { p: 0, q: 0, t: 0, o_kind: TurnKind::FinalAnswer, final_contains_answer: false }),
        ("wrong answer, 1 unsolved", TurnStats { p: 0, q: 0, t: 1, o_kind: TurnKind::FinalAnswer, final_contains_answer: false }),
    ];
    print!("{:<26}", "turn");
    for v in RewardVariant::ALL {
        print!("{:>10}", v.as_str());
    }
    println!();
    for (label, stats) in rows {
        print!("{label:<26}");
        for v in RewardVariant::ALL {
            print!("{:>10.4}", turn_reward(&stats, v));
        }
        println!();
    }
}
