//! Localized deployment: a document plus its question-answer pairs become an
//! executable behavior table.

use super::PipelineError;
use crate::model::{check_binding, SubQuestion, SuccessRow, ToolBehavior, ToolDocument};

/// The success payload. Always contains `answer` verbatim.
pub fn response_template(tool: &str, answer: &str) -> String {
    format!("{tool} result: {answer}")
}

pub fn deploy(doc: &ToolDocument, qa_pairs: &[(&SubQuestion, &str)]) -> Result<ToolBehavior, PipelineError> {
    let mut rows = Vec::with_capacity(qa_pairs.len());
    for (q, answer) in qa_pairs {
        if q.tool_name != doc.name {
            return Err(PipelineError::BindingTypeMismatch {
                tool: doc.name.clone(),
                param: String::new(),
                detail: format!("sub-question {} is mapped to '{}'", q.id, q.tool_name),
            });
        }
        for (param, literal) in &q.canonical_bindings {
            let mismatch = |detail: String| PipelineError::BindingTypeMismatch {
                tool: doc.name.clone(),
                param: param.clone(),
                detail,
            };
            let spec = doc
                .parameter(param)
                .ok_or_else(|| mismatch("parameter is not declared".into()))?;
            check_binding(spec, literal).map_err(mismatch)?;
        }
        if let Some(missing) = doc
            .required_names()
            .into_iter()
            .find(|r| !q.canonical_bindings.contains_key(*r))
        {
            return Err(PipelineError::MissingBinding {
                tool: doc.name.clone(),
                param: missing.to_string(),
            });
        }
        rows.push(SuccessRow {
            sub_question: q.id.clone(),
            depends_on: q.depends_on.clone(),
            answer: answer.to_string(),
            match_bindings: q.canonical_bindings.clone(),
            response_template: response_template(&doc.name, answer),
        });
    }
    Ok(ToolBehavior {
        tool_name: doc.name.clone(),
        success_table: rows,
        fallback_error_templates: ToolBehavior::default_error_templates(),
    })
}
