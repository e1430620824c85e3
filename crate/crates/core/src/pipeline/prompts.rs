//! Construction prompts for the LLM backend, shipped as text assets.

pub const DOCUMENT_GENERATION: &str = include_str!("../../assets/prompts/document_generation.txt");
pub const FUNCTION_INTEGRATION: &str = include_str!("../../assets/prompts/function_integration.txt");
pub const COMPLEXITY_SCALING: &str = include_str!("../../assets/prompts/complexity_scaling.txt");
pub const LOCALIZED_DEPLOYMENT: &str = include_str!("../../assets/prompts/localized_deployment.txt");
pub const CODE_VERIFY: &str = include_str!("../../assets/prompts/code_verify.txt");

/// Python `str.format` semantics: `{{` and `}}` are literal braces and
/// `{name}` is substituted. Unknown names and stray braces are errors.
pub fn render(template: &str, vars: &[(&str, &str)]) -> Result<String, String> {
    let mut out = String::with_capacity(template.len());
    let mut chars = template.chars().peekable();
    while let Some(c) = chars.next() {
        match c {
            '{' if chars.peek() == Some(&'{') => {
                chars.next();
                out.push('{');
            }
            '}' if chars.peek() == Some(&'}') => {
                chars.next();
                out.push('}');
            }
            '{' => {
                let mut name = String::new();
                loop {
                    match chars.next() {
                        Some('}') => break,
                        Some(ch) => name.push(ch),
                        None => return Err("unterminated placeholder".into()),
                    }
                }
                let value = vars
                    .iter()
                    .find(|(k, _)| *k == name)
                    .ok_or_else(|| format!("no value for placeholder '{name}'"))?;
                out.push_str(value.1);
            }
            '}' => return Err("single '}' in template".into()),
            other => out.push(other),
        }
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn every_asset_renders() {
        let cases: [(&str, &[&str]); 5] = [
            (DOCUMENT_GENERATION, &["question"]),
            (FUNCTION_INTEGRATION, &["documents"]),
            (COMPLEXITY_SCALING, &["tool"]),
            (LOCALIZED_DEPLOYMENT, &["document", "pairs"]),
            (CODE_VERIFY, &["question", "code"]),
        ];
        for (template, names) in cases {
            let vars: Vec<(&str, &str)> = names.iter().map(|n| (*n, "<<X>>")).collect();
            let text = render(template, &vars).unwrap();
            assert_eq!(text.matches("<<X>>").count(), names.len());
            assert!(!text.contains("{{"));
        }
    }

    #[test]
    fn example_json_unescapes() {
        let text = render(DOCUMENT_GENERATION, &[("question", "Q")]).unwrap();
        assert!(text.contains("\"name\": \"distance_calculator\""));
        assert!(text.contains("\"required\": [\"landmark\"]"));
        assert!(text.trim_end().ends_with("**Question**: Q\n\n**Output**:"));
    }

    #[test]
    fn rejects_unknown_placeholder() {
        assert!(render("{a}", &[]).is_err());
        assert!(render("x } y", &[]).is_err());
    }
}
