//! Text and value normalization shared by argument matching and answer checks.

use serde_json::Value;
use unicode_normalization::UnicodeNormalization;

/// Relative tolerance for numeric argument comparison.
pub const NUMBER_RTOL: f64 = 1e-9;

/// NFC, trim, case-fold. Used for argument matching.
pub fn fold_arg(s: &str) -> String {
    let nfc: String = s.nfc().collect();
    caseless::default_case_fold_str(nfc.trim())
}

/// NFC, whitespace runs collapsed to one space, case-fold. Used for answer
/// containment checks.
pub fn fold_text(s: &str) -> String {
    let nfc: String = s.nfc().collect();
    let collapsed = nfc.split_whitespace().collect::<Vec<_>>().join(" ");
    caseless::default_case_fold_str(&collapsed)
}

/// `true` when `needle` occurs in `haystack` after [`fold_text`] on both.
pub fn contains_answer(haystack: &str, needle: &str) -> bool {
    fold_text(haystack).contains(&fold_text(needle))
}

pub fn numbers_match(a: f64, b: f64) -> bool {
    if a == b {
        return true;
    }
    let scale = a.abs().max(b.abs());
    (a - b).abs() <= NUMBER_RTOL * scale
}

/// Structural equality under argument normalization: strings fold-equal,
/// numbers within [`NUMBER_RTOL`], lists element-wise in order, objects by
/// key set and per-key value.
pub fn values_match(a: &Value, b: &Value) -> bool {
    match (a, b) {
        (Value::String(x), Value::String(y)) => fold_arg(x) == fold_arg(y),
        (Value::Number(x), Value::Number(y)) => match (x.as_f64(), y.as_f64()) {
            (Some(x), Some(y)) => numbers_match(x, y),
            _ => false,
        },
        (Value::Bool(x), Value::Bool(y)) => x == y,
        (Value::Null, Value::Null) => true,
        (Value::Array(x), Value::Array(y)) => {
            x.len() == y.len() && x.iter().zip(y).all(|(l, r)| values_match(l, r))
        }
        (Value::Object(x), Value::Object(y)) => {
            x.len() == y.len()
                && x
                    .iter()
                    .all(|(k, v)| y.get(k).is_some_and(|w| values_match(v, w)))
        }
        _ => false,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use serde_json::json;

    #[test]
    fn strings_fold_case_and_whitespace() {
        assert!(values_match(&json!("  Paris "), &json!("paris")));
        assert!(!values_match(&json!("Par is"), &json!("paris")));
        // composed vs decomposed e-acute
        assert!(values_match(&json!("caf\u{e9}"), &json!("cafe\u{301}")));
    }

    #[test]
    fn integers_compare_with_floats() {
        assert!(values_match(&json!(5), &json!(5.0)));
        assert!(values_match(&json!(1e12), &json!(1e12 + 1e-4)));
        assert!(!values_match(&json!(1.0), &json!(1.001)));
    }

    #[test]
    fn lists_are_ordered() {
        assert!(values_match(&json!(["a", "B"]), &json!(["A", "b"])));
        assert!(!values_match(&json!(["a", "b"]), &json!(["b", "a"])));
    }

    #[test]
    fn answer_containment_collapses_whitespace() {
        assert!(contains_answer("seats:\n128   total", "128 TOTAL"));
        assert!(!contains_answer("no data", "128"));
    }
}
