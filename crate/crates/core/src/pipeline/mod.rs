//! Environment construction: decomposition, document generation, function
//! integration, complexity scaling and localized deployment.

pub mod catalog;
mod deploy;
mod distractors;
mod integrate;
pub mod llm;
pub mod presets;
pub mod prompts;
mod scale;
mod synthetic;

use std::fmt;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::model::{
    validate_bundle, EnvironmentBundle, ScenarioKind, SubQuestion, ToolDocument, ToolEntry,
    ValidationReport,
};

pub use deploy::{deploy, response_template};
pub use distractors::DistractorCatalog;
pub use integrate::{apply_merge_plan, integrate_functions, MergeGroup, MergePlan, MergeResult};
pub use scale::{scale_complexity, EXPANSION_POOL};
pub use synthetic::{decompose, SyntheticBackend};

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ScenarioSeed {
    pub scenario: ScenarioKind,
    pub n_subq: usize,
    /// Synthetic backend only: id of the relation used for the first hop of
    /// every chain (see [`catalog::Relation::id`]).
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub templates: Option<String>,
    pub rng_seed: u64,
}

impl ScenarioSeed {
    pub fn new(scenario: ScenarioKind, n_subq: usize, rng_seed: u64) -> Self {
        ScenarioSeed {
            scenario,
            n_subq,
            templates: None,
            rng_seed,
        }
    }

    pub fn with_template(mut self, id: impl Into<String>) -> Self {
        self.templates = Some(id.into());
        self
    }

    pub fn validate(&self) -> Result<(), PipelineError> {
        let ok = match self.scenario {
            ScenarioKind::SingleHop => self.n_subq == 1,
            ScenarioKind::ParallelSingleHop | ScenarioKind::MultiHop => self.n_subq >= 2,
            ScenarioKind::ParallelMultiHop => self.n_subq >= 3,
        };
        if ok {
            Ok(())
        } else {
            Err(PipelineError::InvalidSeed(format!(
                "{} cannot have {} sub-questions",
                self.scenario, self.n_subq
            )))
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScalingConfig {
    #[serde(default)]
    pub functional_generalization: bool,
    #[serde(default)]
    pub parameter_expansion: usize,
    #[serde(default)]
    pub type_generalization: f64,
    #[serde(default)]
    pub toolset_extension: usize,
    #[serde(default)]
    pub rng_seed: u64,
}

impl Default for ScalingConfig {
    fn default() -> Self {
        ScalingConfig {
            functional_generalization: false,
            parameter_expansion: 0,
            type_generalization: 0.0,
            toolset_extension: 0,
            rng_seed: 0,
        }
    }
}

impl ScalingConfig {
    pub fn distractors(k: usize) -> Self {
        ScalingConfig {
            toolset_extension: k,
            ..Self::default()
        }
    }

    pub fn validate(&self) -> Result<(), PipelineError> {
        if (0.0..=1.0).contains(&self.type_generalization) {
            Ok(())
        } else {
            Err(PipelineError::InvalidConfig(format!(
                "type_generalization {} is not a probability",
                self.type_generalization
            )))
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Stage {
    Decompose,
    Generate,
    Integrate,
    Scale,
    Deploy,
    Validate,
}

impl fmt::Display for Stage {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Stage::Decompose => "decompose",
            Stage::Generate => "generate",
            Stage::Integrate => "integrate",
            Stage::Scale => "scale",
            Stage::Deploy => "deploy",
            Stage::Validate => "validate",
        })
    }
}

#[derive(Debug, thiserror::Error)]
pub enum PipelineError {
    #[error("BACKEND_FAILURE: {message}")]
    BackendFailure { message: String, raw: String },
    #[error("CATALOG_EXHAUSTED: requested {requested} distractors, {available} available")]
    CatalogExhausted { requested: usize, available: usize },
    #[error("BINDING_TYPE_MISMATCH: {tool}.{param}: {detail}")]
    BindingTypeMismatch {
        tool: String,
        param: String,
        detail: String,
    },
    #[error("MISSING_BINDING: {tool}.{param} is required but unbound")]
    MissingBinding { tool: String, param: String },
    #[error("INVALID_SEED: {0}")]
    InvalidSeed(String),
    #[error("INVALID_CONFIG: {0}")]
    InvalidConfig(String),
    #[error("VALIDATION_FAILED: {0}")]
    Invalid(ValidationReport),
    #[error("{stage} stage: {source}")]
    Stage {
        stage: Stage,
        #[source]
        source: Box<PipelineError>,
    },
}

impl PipelineError {
    pub fn code(&self) -> &'static str {
        match self {
            PipelineError::BackendFailure { .. } => "BACKEND_FAILURE",
            PipelineError::CatalogExhausted { .. } => "CATALOG_EXHAUSTED",
            PipelineError::BindingTypeMismatch { .. } => "BINDING_TYPE_MISMATCH",
            PipelineError::MissingBinding { .. } => "MISSING_BINDING",
            PipelineError::InvalidSeed(_) => "INVALID_SEED",
            PipelineError::InvalidConfig(_) => "INVALID_CONFIG",
            PipelineError::Invalid(_) => "VALIDATION_FAILED",
            PipelineError::Stage { source, .. } => source.code(),
        }
    }

    fn at(self, stage: Stage) -> Self {
        match self {
            tagged @ PipelineError::Stage { .. } => tagged,
            other => PipelineError::Stage {
                stage,
                source: Box::new(other),
            },
        }
    }
}

/// Output of the document generation stage: one document per sub-question,
/// index-aligned.
#[derive(Debug, Clone, PartialEq)]
pub struct GeneratedDocs {
    pub question: String,
    pub final_answer: String,
    pub sub_questions: Vec<SubQuestion>,
    pub documents: Vec<ToolDocument>,
}

/// The model-dependent parts of construction.
pub trait GenerationBackend {
    fn generate_documents(&mut self, seed: &ScenarioSeed) -> Result<GeneratedDocs, PipelineError>;

    fn integrate(&mut self, docs: &[ToolDocument]) -> Result<MergePlan, PipelineError> {
        Ok(integrate_functions(docs))
    }

    /// Functional generalization. `None` leaves the document unchanged.
    fn generalize(&mut self, _doc: &ToolDocument) -> Result<Option<ToolDocument>, PipelineError> {
        Ok(None)
    }
}

/// `{scenario}-{first 12 hex digits of sha256(bundle json with empty id)}`
pub fn bundle_id(env: &EnvironmentBundle) -> String {
    let mut blank = env.clone();
    blank.id.clear();
    let bytes = serde_json::to_vec(&blank).expect("bundle serializes");
    let digest = Sha256::digest(&bytes);
    let hex: String = digest.iter().take(6).map(|b| format!("{b:02x}")).collect();
    format!("{}-{hex}", env.scenario)
}

pub(crate) fn stage_rng(seed: u64, salt: &str) -> ChaCha8Rng {
    let mut h = Sha256::new();
    h.update(seed.to_le_bytes());
    h.update(salt.as_bytes());
    ChaCha8Rng::from_seed(h.finalize().into())
}

/// Runs every stage and returns a validated bundle.
pub fn build_environment(
    seed: &ScenarioSeed,
    cfg: &ScalingConfig,
    backend: &mut dyn GenerationBackend,
) -> Result<EnvironmentBundle, PipelineError> {
    build_with_catalog(seed, cfg, backend, &DistractorCatalog::builtin())
}

pub fn build_with_catalog(
    seed: &ScenarioSeed,
    cfg: &ScalingConfig,
    backend: &mut dyn GenerationBackend,
    catalog: &DistractorCatalog,
) -> Result<EnvironmentBundle, PipelineError> {
    seed.validate().map_err(|e| e.at(Stage::Decompose))?;
    cfg.validate().map_err(|e| e.at(Stage::Scale))?;

    let generated = backend
        .generate_documents(seed)
        .map_err(|e| e.at(Stage::Generate))?;
    if generated.documents.len() != generated.sub_questions.len() {
        return Err(PipelineError::BackendFailure {
            message: "document count differs from sub-question count".into(),
            raw: String::new(),
        }
        .at(Stage::Generate));
    }

    let plan = backend
        .integrate(&generated.documents)
        .map_err(|e| e.at(Stage::Integrate))?;
    let merged = apply_merge_plan(&generated.documents, &plan).map_err(|e| e.at(Stage::Integrate))?;
    let mut sub_questions = generated.sub_questions;
    for (q, &slot) in sub_questions.iter_mut().zip(&merged.assignment) {
        q.tool_name = merged.documents[slot].name.clone();
    }

    let mut tools = Vec::with_capacity(merged.documents.len());
    for doc in merged.documents {
        let pairs: Vec<(&SubQuestion, &str)> = sub_questions
            .iter()
            .filter(|q| q.tool_name == doc.name)
            .map(|q| (q, q.answer.as_str()))
            .collect();
        let behavior = deploy(&doc, &pairs).map_err(|e| e.at(Stage::Deploy))?;
        tools.push(ToolEntry {
            document: doc,
            behavior,
        });
    }

    let env = EnvironmentBundle {
        id: String::new(),
        scenario: seed.scenario,
        question: generated.question,
        final_answer: generated.final_answer,
        sub_questions,
        tools,
        distractors: Vec::new(),
        rng_seed: seed.rng_seed,
    };
    let mut env = scale_complexity(&env, cfg, catalog, backend).map_err(|e| e.at(Stage::Scale))?;
    env.id = bundle_id(&env);

    let report = validate_bundle(&env);
    if report.is_empty() {
        Ok(env)
    } else {
        Err(PipelineError::Invalid(report).at(Stage::Validate))
    }
}
