//! Field retrieval: fuzzy patterns, then named entities, then the LLM, with
//! the first stage that finds something ending the search.

mod catalog;
mod llm;
mod ner;
mod query;

use std::collections::BTreeMap;
use std::sync::{Arc, OnceLock};

use serde::{Deserialize, Serialize};

pub use catalog::{iban_is_valid, iban_length, PatternCatalog, PatternSpec, PostFilter, EMAIL_PATTERN};
pub use llm::{llm_retrieve, parse_llm_values, LLM_CONFIDENCE};
pub use ner::{CommandNer, GazetteerNer, NerEngine, PhraseSet};
pub use query::{normalize_key, normalize_query, Category, FieldQuery, SynonymTable};

use crate::llm::{LlmError, LlmGateway};
use crate::text::LanguageTag;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Stage {
    FuzzyRegex,
    Ner,
    Llm,
}

impl Stage {
    pub const ORDER: [Stage; 3] = [Stage::FuzzyRegex, Stage::Ner, Stage::Llm];

    pub fn as_str(self) -> &'static str {
        match self {
            Stage::FuzzyRegex => "fuzzy_regex",
            Stage::Ner => "ner",
            Stage::Llm => "llm",
        }
    }
}

impl std::fmt::Display for Stage {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.as_str())
    }
}

/// Character offsets, end exclusive.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Span {
    pub start: usize,
    pub end: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Match {
    pub value: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub span: Option<Span>,
    pub stage: Stage,
    pub confidence: f64,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct StageFailure {
    pub stage: Stage,
    pub error: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RetrievalResult {
    pub query: FieldQuery,
    pub matches: Vec<Match>,
    pub stage_fired: Option<Stage>,
    pub stages_attempted: Vec<Stage>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub failed_stages: Vec<StageFailure>,
}

impl RetrievalResult {
    pub fn values(&self) -> Vec<&str> {
        self.matches.iter().map(|m| m.value.as_str()).collect()
    }
}

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum CascadeError {
    #[error("query is empty")]
    EmptyQuery,
    #[error("text is empty")]
    EmptyText,
    #[error("unknown category {0:?}")]
    UnknownCategory(String),
    #[error("no catalog pattern for {0}")]
    NoCatalogEntry(Category),
    #[error("{0} is not an entity category")]
    NotAnEntity(Category),
    #[error("invalid pattern catalog: {0}")]
    InvalidCatalog(String),
    #[error("{0} backend is not configured")]
    BackendUnavailable(&'static str),
    #[error("NER backend failed: {0}")]
    Backend(String),
    #[error(transparent)]
    Gateway(#[from] LlmError),
    #[error("every stage failed for {:?}", query.raw)]
    AllStagesFailed {
        query: FieldQuery,
        failures: Vec<StageFailure>,
    },
}

impl CascadeError {
    pub fn code(&self) -> &'static str {
        match self {
            CascadeError::EmptyQuery => "empty_query",
            CascadeError::EmptyText => "empty_text",
            CascadeError::UnknownCategory(_) => "unknown_category",
            CascadeError::NoCatalogEntry(_) => "no_catalog_entry",
            CascadeError::NotAnEntity(_) => "not_an_entity",
            CascadeError::InvalidCatalog(_) => "invalid_catalog",
            CascadeError::BackendUnavailable(_) => "backend_unavailable",
            CascadeError::Backend(_) => "backend_error",
            CascadeError::Gateway(_) => "gateway_error",
            CascadeError::AllStagesFailed { .. } => "all_stages_failed",
        }
    }
}

/// Which stages each category may use. Categories without an entry use the
/// default route; listed stages are reordered into cascade order.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RoutingConfig {
    /// Extra query synonyms, keyed by raw text (normalized on load).
    pub synonyms: BTreeMap<String, Category>,
    pub stages: BTreeMap<Category, Vec<Stage>>,
}

impl RoutingConfig {
    /// Pattern categories go regex then LLM, entities NER then LLM, and
    /// language NER only since the LLM tends to answer with the language
    /// the document is written in.
    pub fn default_stages(category: Category) -> Vec<Stage> {
        match category {
            Category::Language => vec![Stage::Ner],
            Category::Freeform => vec![Stage::Llm],
            c if c.is_entity() => vec![Stage::Ner, Stage::Llm],
            _ => vec![Stage::FuzzyRegex, Stage::Llm],
        }
    }

    pub fn route(&self, category: Category) -> Vec<Stage> {
        let listed = self
            .stages
            .get(&category)
            .cloned()
            .unwrap_or_else(|| Self::default_stages(category));
        Stage::ORDER
            .into_iter()
            .filter(|s| listed.contains(s))
            .collect()
    }
}

/// Retrieval engines plus routing. Immutable once built; share it freely.
#[derive(Clone)]
pub struct Cascade {
    synonyms: SynonymTable,
    routing: RoutingConfig,
    catalog: Arc<PatternCatalog>,
    ner: Option<Arc<dyn NerEngine>>,
    gateway: Option<LlmGateway>,
}

impl std::fmt::Debug for Cascade {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("Cascade")
            .field("routing", &self.routing)
            .field("ner", &self.ner.as_ref().map(|n| n.id().to_string()))
            .field("gateway", &self.gateway.is_some())
            .finish()
    }
}

impl Default for Cascade {
    fn default() -> Self {
        Self::new()
    }
}

impl Cascade {
    /// Built-in catalog and gazetteer, no LLM.
    pub fn new() -> Self {
        Self {
            synonyms: SynonymTable::builtin(),
            routing: RoutingConfig::default(),
            catalog: Arc::new(PatternCatalog::builtin()),
            ner: Some(Arc::new(GazetteerNer::builtin())),
            gateway: None,
        }
    }

    pub fn with_routing(mut self, routing: RoutingConfig) -> Self {
        self.synonyms = SynonymTable::with_overrides(&routing.synonyms);
        self.routing = routing;
        self
    }

    pub fn with_catalog(mut self, catalog: PatternCatalog) -> Self {
        self.catalog = Arc::new(catalog);
        self
    }

    pub fn with_ner(mut self, ner: Option<Arc<dyn NerEngine>>) -> Self {
        self.ner = ner;
        self
    }

    pub fn with_gateway(mut self, gateway: Option<LlmGateway>) -> Self {
        self.gateway = gateway;
        self
    }

    pub fn catalog(&self) -> &PatternCatalog {
        &self.catalog
    }

    pub fn gateway(&self) -> Option<&LlmGateway> {
        self.gateway.as_ref()
    }

    pub fn query(&self, raw: &str) -> Result<FieldQuery, CascadeError> {
        self.synonyms.normalize(raw)
    }

    /// Stages whose precondition can hold for the category, in cascade order.
    pub fn applicable_stages(&self, query: &FieldQuery) -> Vec<Stage> {
        self.routing
            .route(query.category)
            .into_iter()
            .filter(|s| match s {
                Stage::FuzzyRegex => self.catalog.contains(query.category),
                Stage::Ner => query.category.is_entity(),
                Stage::Llm => true,
            })
            .collect()
    }

    fn run_stage(
        &self,
        stage: Stage,
        text: &str,
        query: &FieldQuery,
        language: LanguageTag,
    ) -> Result<Vec<Match>, CascadeError> {
        match stage {
            Stage::FuzzyRegex => self.catalog.find(text, query.category),
            Stage::Ner => self
                .ner
                .as_ref()
                .ok_or(CascadeError::BackendUnavailable("ner"))?
                .entities(text, query.category, language),
            Stage::Llm => llm_retrieve(
                text,
                query,
                self.gateway
                    .as_ref()
                    .ok_or(CascadeError::BackendUnavailable("llm"))?,
            ),
        }
    }

    /// Runs applicable stages in order until one returns a match. A failing
    /// stage is recorded and the cascade moves on.
    pub fn retrieve(
        &self,
        text: &str,
        query: &FieldQuery,
        language: LanguageTag,
    ) -> Result<RetrievalResult, CascadeError> {
        if text.trim().is_empty() {
            return Err(CascadeError::EmptyText);
        }
        let stages = self.applicable_stages(query);
        let mut result = RetrievalResult {
            query: query.clone(),
            matches: Vec::new(),
            stage_fired: None,
            stages_attempted: Vec::new(),
            failed_stages: Vec::new(),
        };
        for &stage in &stages {
            result.stages_attempted.push(stage);
            match self.run_stage(stage, text, query, language) {
                Ok(matches) if !matches.is_empty() => {
                    result.matches = matches;
                    result.stage_fired = Some(stage);
                    break;
                }
                Ok(_) => {}
                Err(e) => {
                    log::debug!("{stage} failed for {:?}: {e}", query.raw);
                    result.failed_stages.push(StageFailure {
                        stage,
                        error: e.to_string(),
                    });
                }
            }
        }
        if !stages.is_empty() && result.failed_stages.len() == stages.len() {
            return Err(CascadeError::AllStagesFailed {
                query: result.query,
                failures: result.failed_stages,
            });
        }
        Ok(result)
    }

    pub fn retrieve_raw(
        &self,
        text: &str,
        raw: &str,
        language: LanguageTag,
    ) -> Result<RetrievalResult, CascadeError> {
        self.retrieve(text, &self.query(raw)?, language)
    }

    /// One result per query, in order; failures stay with their query.
    pub fn retrieve_all<S: AsRef<str>>(
        &self,
        text: &str,
        queries: &[S],
        language: LanguageTag,
    ) -> Vec<Result<RetrievalResult, CascadeError>> {
        queries
            .iter()
            .map(|q| self.retrieve_raw(text, q.as_ref(), language))
            .collect()
    }
}

fn default_cascade() -> &'static Cascade {
    static CASCADE: OnceLock<Cascade> = OnceLock::new();
    CASCADE.get_or_init(Cascade::new)
}

/// Built-in catalog lookup.
pub fn match_fuzzy_regex(text: &str, query: &FieldQuery) -> Result<Vec<Match>, CascadeError> {
    default_cascade().catalog.find(text, query.category)
}

/// Built-in gazetteer lookup.
pub fn match_ner(
    text: &str,
    query: &FieldQuery,
    language: LanguageTag,
) -> Result<Vec<Match>, CascadeError> {
    if !query.category.is_entity() {
        return Err(CascadeError::NotAnEntity(query.category));
    }
    default_cascade().run_stage(Stage::Ner, text, query, language)
}
