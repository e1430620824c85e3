//! Complexity scaling: functional generalization, parameter expansion,
//! parameter type generalization and toolset extension.

use std::collections::BTreeSet;

use rand::seq::SliceRandom;
use rand::Rng;
use rand_chacha::ChaCha8Rng;
use serde_json::Value;

use super::{deploy, stage_rng, DistractorCatalog, GenerationBackend, PipelineError, ScalingConfig};
use crate::model::{
    validate_bundle, EnvironmentBundle, Literal, ParameterSpec, SubQuestion, ToolDocument, ToolEntry,
    ValueKind, ValueType,
};

/// Optional parameters available to parameter expansion.
pub const EXPANSION_POOL: &[(&str, ValueKind, &str)] = &[
    ("language", ValueKind::String, "Language of the response text. Default is 'en'."),
    ("include_sources", ValueKind::Boolean, "Attach source citations to the result. Default is false."),
    ("max_results", ValueKind::Integer, "Upper bound on returned records. Default is 1."),
    ("response_format", ValueKind::String, "Layout of the response: 'text' or 'json'. Default is 'text'."),
    ("as_of_date", ValueKind::String, "Return data valid on this date (YYYY-MM-DD)."),
    ("confidence_threshold", ValueKind::Number, "Minimum confidence score between 0 and 1. Default is 0.5."),
    ("verbose", ValueKind::Boolean, "Include auxiliary details in the response. Default is false."),
];

fn expansion_spec(name: &str, kind: ValueKind, desc: &str) -> ParameterSpec {
    let spec = ParameterSpec::new(name, kind, desc);
    match name {
        "language" => spec.with_default("en"),
        "include_sources" | "verbose" => spec.with_default(false),
        "max_results" => spec.with_default(1),
        "response_format" => spec.with_enum(["text", "json"]).with_default("text"),
        "confidence_threshold" => spec.with_default(0.5),
        _ => spec,
    }
}

fn expand(doc: &mut ToolDocument, max: usize, rng: &mut ChaCha8Rng) {
    if max == 0 {
        return;
    }
    let count = rng.random_range(0..=max);
    let mut pool: Vec<_> = EXPANSION_POOL
        .iter()
        .filter(|(name, ..)| doc.parameter(name).is_none())
        .collect();
    pool.shuffle(rng);
    for (name, kind, desc) in pool.into_iter().take(count) {
        doc.parameters.push(expansion_spec(name, *kind, desc));
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Wrap {
    List,
    Object,
}

impl Wrap {
    fn literal(self, inner: Literal) -> Literal {
        match self {
            Wrap::List => Literal::List(vec![inner]),
            Wrap::Object => Literal::Map([("value".to_string(), inner)].into()),
        }
    }

    fn value(self, inner: Value) -> Value {
        match self {
            Wrap::List => Value::Array(vec![inner]),
            Wrap::Object => serde_json::json!({ "value": inner }),
        }
    }

    fn spec(self, old: &ParameterSpec) -> ParameterSpec {
        let mut inner = old.clone();
        inner.required = true;
        inner.default = None;
        let (value_type, description) = match self {
            Wrap::List => {
                inner.name = "items".into();
                inner.description = String::new();
                (
                    ValueType::array_of(inner),
                    format!("{} Given as a list.", old.description).trim().to_string(),
                )
            }
            Wrap::Object => {
                inner.name = "value".into();
                (
                    ValueType::object_of(vec![inner]),
                    format!("{} Given as an object with a 'value' field.", old.description)
                        .trim()
                        .to_string(),
                )
            }
        };
        ParameterSpec {
            name: old.name.clone(),
            value_type,
            description,
            required: old.required,
            enum_values: None,
            default: old.default.clone().map(|d| self.value(d)),
        }
    }
}

/// Rewrites scalar parameters of `doc` into wrapped forms, updating every
/// canonical binding of the sub-questions it serves.
fn generalize_types(doc: &mut ToolDocument, subqs: &mut [SubQuestion], p: f64, rng: &mut ChaCha8Rng) {
    if p <= 0.0 {
        return;
    }
    for param in doc.parameters.iter_mut() {
        if !param.kind().is_scalar() || !rng.random_bool(p) {
            continue;
        }
        let wrap = if rng.random_bool(0.5) { Wrap::List } else { Wrap::Object };
        *param = wrap.spec(param);
        for q in subqs.iter_mut().filter(|q| q.tool_name == doc.name) {
            if let Some(lit) = q.canonical_bindings.remove(&param.name) {
                q.canonical_bindings.insert(param.name.clone(), wrap.literal(lit));
            }
        }
    }
}

fn redeploy(doc: ToolDocument, subqs: &[SubQuestion]) -> Result<ToolEntry, PipelineError> {
    let pairs: Vec<(&SubQuestion, &str)> = subqs
        .iter()
        .filter(|q| q.tool_name == doc.name)
        .map(|q| (q, q.answer.as_str()))
        .collect();
    let behavior = deploy(&doc, &pairs)?;
    Ok(ToolEntry { document: doc, behavior })
}

/// Applies the enabled strategies to every essential tool, appends
/// `toolset_extension` distractors and redeploys all behaviors. The result
/// is re-validated.
pub fn scale_complexity(
    env: &EnvironmentBundle,
    cfg: &ScalingConfig,
    catalog: &DistractorCatalog,
    backend: &mut dyn GenerationBackend,
) -> Result<EnvironmentBundle, PipelineError> {
    cfg.validate()?;
    let mut rng = stage_rng(cfg.rng_seed ^ env.rng_seed.rotate_left(32), "scale");
    let mut out = env.clone();
    let distractors: BTreeSet<&String> = env.distractors.iter().collect();

    let mut tools = Vec::with_capacity(env.tools.len() + cfg.toolset_extension);
    for entry in &env.tools {
        if distractors.contains(&entry.document.name) {
            tools.push(entry.clone());
            continue;
        }
        let mut doc = entry.document.clone();
        if cfg.functional_generalization {
            if let Some(refined) = backend.generalize(&doc)? {
                if refined.name == doc.name && refined.required_names() == doc.required_names() {
                    doc.description = refined.description;
                }
            }
        }
        expand(&mut doc, cfg.parameter_expansion, &mut rng);
        generalize_types(&mut doc, &mut out.sub_questions, cfg.type_generalization, &mut rng);
        tools.push(redeploy(doc, &out.sub_questions)?);
    }

    let taken: BTreeSet<String> = tools.iter().map(|t| t.document.name.clone()).collect();
    for doc in catalog.pick(cfg.toolset_extension, &taken, &mut rng)? {
        out.distractors.push(doc.name.clone());
        tools.push(redeploy(doc, &[])?);
    }
    out.tools = tools;

    let report = validate_bundle(&out);
    if report.is_empty() {
        Ok(out)
    } else {
        Err(PipelineError::Invalid(report))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::pipeline::{build_environment, ScenarioSeed, SyntheticBackend};
    use crate::model::ScenarioKind;
    use rand::SeedableRng;

    fn base() -> EnvironmentBundle {
        let seed = ScenarioSeed::new(ScenarioKind::MultiHop, 4, 17);
        build_environment(&seed, &ScalingConfig::default(), &mut SyntheticBackend).unwrap()
    }

    #[test]
    fn extension_is_additive() {
        let env = base();
        let scaled = scale_complexity(&env, &ScalingConfig::distractors(3), &DistractorCatalog::builtin(), &mut SyntheticBackend).unwrap();
        assert_eq!(scaled.tools.len(), env.tools.len() + 3);
        assert_eq!(scaled.distractors.len(), 3);
        assert_eq!(scaled.sub_questions, env.sub_questions);
    }

    #[test]
    fn expansion_keeps_required_sets() {
        let env = base();
        let cfg = ScalingConfig {
            parameter_expansion: 2,
            ..ScalingConfig::default()
        };
        let scaled = scale_complexity(&env, &cfg, &DistractorCatalog::builtin(), &mut SyntheticBackend).unwrap();
        for (a, b) in env.tools.iter().zip(&scaled.tools) {
            assert_eq!(a.document.required_names(), b.document.required_names());
            assert!(b.document.parameters.len() <= a.document.parameters.len() + 2);
        }
    }

    #[test]
    fn list_wrap_rewrites_binding() {
        let mut doc = ToolDocument::new("weather", "w").param(ParameterSpec::new("location", ValueKind::String, "").required());
        let mut q = vec![SubQuestion {
            id: "q1".into(),
            text: "Weather in Paris?".into(),
            answer: "sunny".into(),
            depends_on: vec![],
            tool_name: "weather".into(),
            canonical_bindings: [("location".to_string(), Literal::from("Paris"))].into(),
        }];
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        generalize_types(&mut doc, &mut q, 1.0, &mut rng);
        let wrapped = &q[0].canonical_bindings["location"];
        match doc.parameters[0].kind() {
            ValueKind::Array => assert_eq!(wrapped, &Literal::List(vec![Literal::from("Paris")])),
            ValueKind::Object => assert_eq!(wrapped.to_value(), serde_json::json!({"value": "Paris"})),
            other => panic!("{other}"),
        }
        assert!(redeploy(doc, &q).is_ok());
    }

    #[test]
    fn exhausted_catalog() {
        let env = base();
        let err = scale_complexity(&env, &ScalingConfig::distractors(99), &DistractorCatalog::builtin(), &mut SyntheticBackend).unwrap_err();
        assert!(matches!(err, PipelineError::CatalogExhausted { .. }));
    }
}
