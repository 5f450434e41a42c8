//! One JSON run configuration and the pipeline it builds.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};
use std::sync::Arc;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::cascade::{
    CascadeError, Cascade, CommandNer, GazetteerNer, NerEngine, PatternCatalog, RetrievalResult,
    RoutingConfig,
};
use crate::eval::EvalOptions;
use crate::imaging::{CommandRasterizer, ImagingError, PreprocessConfig};
use crate::llm::{GatewayConfig, GatewayMode, LlmError, LlmGateway, TemplateId};
use crate::text::{
    extract_text, CommandOcr, Document, ExtractedText, ExtractionConfig, ExtractionContext,
    GlyphCellOcr, LanguageTag, OcrEngine, SpellDictionary, TextError,
};

#[derive(Debug, thiserror::Error)]
pub enum ConfigError {
    #[error("cannot read config {path}: {message}")]
    Io { path: PathBuf, message: String },
    #[error("invalid config: {0}")]
    Parse(String),
    #[error("invalid config value {key}: {message}")]
    Value { key: String, message: String },
    #[error(transparent)]
    Imaging(#[from] ImagingError),
    #[error(transparent)]
    Text(#[from] TextError),
    #[error(transparent)]
    Llm(#[from] LlmError),
    #[error(transparent)]
    Cascade(#[from] CascadeError),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct StageFlags {
    pub language_detection: bool,
    pub spell_check: bool,
    pub llm_correction: bool,
    pub llm_best_effort: bool,
}

impl Default for StageFlags {
    fn default() -> Self {
        let e = ExtractionConfig::default();
        Self {
            language_detection: e.language_detection,
            spell_check: e.spell_check,
            llm_correction: e.llm_correction,
            llm_best_effort: e.llm_best_effort,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct TextSettings {
    pub ocr_language_hint: LanguageTag,
    pub correction_template: TemplateId,
    pub pdf_dpi: u32,
}

impl Default for TextSettings {
    fn default() -> Self {
        let e = ExtractionConfig::default();
        Self {
            ocr_language_hint: e.ocr_language_hint,
            correction_template: e.correction_template,
            pdf_dpi: e.pdf_dpi,
        }
    }
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum OcrAdapter {
    #[default]
    None,
    /// Reader for rasters drawn by the built-in cell font.
    GlyphStub,
    /// External program, see [`CommandOcr`].
    Command(String),
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum NerAdapter {
    None,
    #[default]
    Gazetteer,
    Command(String),
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct AdapterConfig {
    pub ocr: OcrAdapter,
    pub ner: NerAdapter,
    /// PDF rasterizer command template, see [`CommandRasterizer`].
    pub rasterizer: Option<String>,
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PathsConfig {
    /// Replacement spell-check dictionaries ("word count" lines).
    pub dictionaries: BTreeMap<LanguageTag, PathBuf>,
    /// Pattern catalog overrides (JSON).
    pub catalog: Option<PathBuf>,
    /// Generator pool directory replacing the bundled pools.
    pub pools: Option<PathBuf>,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    pub preprocessing: PreprocessConfig,
    pub stages: StageFlags,
    pub text: TextSettings,
    pub gateway: GatewayConfig,
    pub routing: RoutingConfig,
    pub adapters: AdapterConfig,
    pub paths: PathsConfig,
    pub evaluation: EvalOptions,
}

fn parse_bool(key: &str, v: &str) -> Result<bool, ConfigError> {
    match v.to_ascii_lowercase().as_str() {
        "1" | "true" | "yes" | "on" => Ok(true),
        "0" | "false" | "no" | "off" => Ok(false),
        _ => Err(ConfigError::Value {
            key: key.into(),
            message: format!("expected a boolean, got {v:?}"),
        }),
    }
}

/// Environment variables read by [`RunConfig::apply_env`].
pub const ENV_VARS: &[&str] = &[
    "DOCSIFT_GATEWAY_MODE",
    "DOCSIFT_TRANSCRIPT",
    "DOCSIFT_LLM_ENDPOINT",
    "DOCSIFT_LLM_MODEL",
    "DOCSIFT_LLM_CORRECTION",
    "DOCSIFT_OCR",
    "DOCSIFT_RASTERIZER",
];

impl RunConfig {
    pub fn from_json(json: &str) -> Result<Self, ConfigError> {
        let config: Self = serde_json::from_str(json).map_err(|e| ConfigError::Parse(e.to_string()))?;
        config.validate()?;
        Ok(config)
    }

    pub fn load(path: &Path) -> Result<Self, ConfigError> {
        let json = std::fs::read_to_string(path).map_err(|e| ConfigError::Io {
            path: path.to_path_buf(),
            message: e.to_string(),
        })?;
        Self::from_json(&json)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("config serializes")
    }

    pub fn validate(&self) -> Result<(), ConfigError> {
        self.preprocessing.validate()?;
        if self.text.pdf_dpi == 0 {
            return Err(ConfigError::Value {
                key: "text.pdf_dpi".into(),
                message: "must be positive".into(),
            });
        }
        if self.gateway.max_in_flight == 0 {
            return Err(ConfigError::Value {
                key: "gateway.max_in_flight".into(),
                message: "must be positive".into(),
            });
        }
        Ok(())
    }

    /// Applies `DOCSIFT_*` variables from `lookup` over the current values.
    /// `DOCSIFT_OCR` takes `none`, `glyph-stub` or `command:<template>`.
    pub fn apply_env(&mut self, lookup: impl Fn(&str) -> Option<String>) -> Result<(), ConfigError> {
        if let Some(v) = lookup("DOCSIFT_GATEWAY_MODE") {
            self.gateway.mode = match v.as_str() {
                "live" => GatewayMode::Live,
                "replay" => GatewayMode::Replay,
                _ => {
                    return Err(ConfigError::Value {
                        key: "DOCSIFT_GATEWAY_MODE".into(),
                        message: format!("expected live or replay, got {v:?}"),
                    })
                }
            };
        }
        if let Some(v) = lookup("DOCSIFT_TRANSCRIPT") {
            self.gateway.transcript = Some(PathBuf::from(v));
        }
        if let Some(v) = lookup("DOCSIFT_LLM_ENDPOINT") {
            self.gateway.endpoint = v;
        }
        if let Some(v) = lookup("DOCSIFT_LLM_MODEL") {
            self.gateway.params.model_id = v;
        }
        if let Some(v) = lookup("DOCSIFT_LLM_CORRECTION") {
            self.stages.llm_correction = parse_bool("DOCSIFT_LLM_CORRECTION", &v)?;
        }
        if let Some(v) = lookup("DOCSIFT_OCR") {
            self.adapters.ocr = parse_ocr_adapter(&v)?;
        }
        if let Some(v) = lookup("DOCSIFT_RASTERIZER") {
            self.adapters.rasterizer = Some(v);
        }
        self.validate()
    }

    pub fn extraction_config(&self) -> ExtractionConfig {
        ExtractionConfig {
            preprocessing: self.preprocessing.clone(),
            ocr_language_hint: self.text.ocr_language_hint,
            language_detection: self.stages.language_detection,
            spell_check: self.stages.spell_check,
            llm_correction: self.stages.llm_correction,
            llm_best_effort: self.stages.llm_best_effort,
            correction_template: self.text.correction_template,
            pdf_dpi: self.text.pdf_dpi,
        }
    }

    /// SHA-256 of the compact JSON form. Maps are ordered, so equal configs
    /// give equal digests.
    pub fn digest(&self) -> String {
        let json = serde_json::to_string(self).expect("config serializes");
        hex::encode(Sha256::digest(json.as_bytes()))
    }
}

/// Parses `none`, `glyph-stub` or `command:<template>`.
pub fn parse_ocr_adapter(v: &str) -> Result<OcrAdapter, ConfigError> {
    match v {
        "none" => Ok(OcrAdapter::None),
        "glyph-stub" | "glyph_stub" => Ok(OcrAdapter::GlyphStub),
        _ => match v.strip_prefix("command:") {
            Some(t) if !t.trim().is_empty() => Ok(OcrAdapter::Command(t.to_string())),
            _ => Err(ConfigError::Value {
                key: "ocr".into(),
                message: format!("expected none, glyph-stub or command:<template>, got {v:?}"),
            }),
        },
    }
}

/// Extraction context plus retrieval cascade built from a [`RunConfig`].
#[derive(Clone)]
pub struct Pipeline {
    config: RunConfig,
    extraction: ExtractionConfig,
    context: ExtractionContext,
    cascade: Cascade,
}

impl std::fmt::Debug for Pipeline {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("Pipeline")
            .field("config", &self.config)
            .field("cascade", &self.cascade)
            .finish_non_exhaustive()
    }
}

impl Pipeline {
    pub fn from_config(config: RunConfig) -> Result<Self, ConfigError> {
        config.validate()?;
        let mut context = ExtractionContext::with_builtin_dictionaries();
        for (&lang, path) in &config.paths.dictionaries {
            context
                .dictionaries
                .insert(lang, Arc::new(SpellDictionary::load(lang, path)?));
        }
        context.ocr = match &config.adapters.ocr {
            OcrAdapter::None => None,
            OcrAdapter::GlyphStub => Some(Arc::new(GlyphCellOcr) as Arc<dyn OcrEngine>),
            OcrAdapter::Command(t) => Some(Arc::new(CommandOcr::new(t.clone())?) as Arc<dyn OcrEngine>),
        };
        if let Some(t) = &config.adapters.rasterizer {
            context.rasterizer = Some(Arc::new(CommandRasterizer::new(t.clone())?));
        }
        // Without a transcript or live endpoint there is nothing to replay.
        let gateway = match (config.gateway.mode, &config.gateway.transcript) {
            (GatewayMode::Replay, None) => None,
            _ => Some(LlmGateway::from_config(&config.gateway)?),
        };
        context.gateway = gateway.clone();

        let ner: Option<Arc<dyn NerEngine>> = match &config.adapters.ner {
            NerAdapter::None => None,
            NerAdapter::Gazetteer => Some(Arc::new(GazetteerNer::builtin())),
            NerAdapter::Command(t) => Some(Arc::new(CommandNer::new(t.clone())?)),
        };
        let mut cascade = Cascade::new()
            .with_routing(config.routing.clone())
            .with_ner(ner)
            .with_gateway(gateway);
        if let Some(path) = &config.paths.catalog {
            cascade = cascade.with_catalog(PatternCatalog::load_overrides(path)?);
        }
        Ok(Self {
            extraction: config.extraction_config(),
            config,
            context,
            cascade,
        })
    }

    /// Replaces the LLM gateway used by both correction and retrieval.
    pub fn with_gateway(mut self, gateway: Option<LlmGateway>) -> Self {
        self.context.gateway = gateway.clone();
        self.cascade = self.cascade.with_gateway(gateway);
        self
    }

    pub fn with_ocr(mut self, engine: Arc<dyn OcrEngine>) -> Self {
        self.context.ocr = Some(engine);
        self
    }

    pub fn config(&self) -> &RunConfig {
        &self.config
    }

    pub fn extraction_config(&self) -> &ExtractionConfig {
        &self.extraction
    }

    pub fn context(&self) -> &ExtractionContext {
        &self.context
    }

    pub fn cascade(&self) -> &Cascade {
        &self.cascade
    }

    pub fn extract(&self, doc: &Document) -> Result<ExtractedText, TextError> {
        extract_text(doc, &self.extraction, &self.context)
    }

    pub fn retrieve<S: AsRef<str>>(
        &self,
        text: &str,
        fields: &[S],
        language: LanguageTag,
    ) -> Vec<Result<RetrievalResult, CascadeError>> {
        self.cascade.retrieve_all(text, fields, language)
    }
}
