use std::collections::HashMap;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use super::ocr::{ocr, OcrEngine};
use super::{correct_spelling, LanguageDetector, LanguageTag, SpellDictionary, TextError};
use crate::imaging::{
    decode_image, detect_format, preprocess, rasterize_pdf, DocumentFormat, PageRaster,
    PreprocessConfig, Rasterizer,
};
use crate::llm::{LlmError, LlmGateway, PromptTemplate, TemplateId};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ExtractionStage {
    Ocr,
    LanguageDetection,
    SpellCheck,
    LlmCorrection,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExtractedText {
    pub text: String,
    pub language: LanguageTag,
    pub stages_applied: Vec<ExtractionStage>,
    pub warnings: Vec<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ExtractionConfig {
    pub preprocessing: PreprocessConfig,
    /// Language passed to OCR before the document language is known.
    pub ocr_language_hint: LanguageTag,
    pub language_detection: bool,
    pub spell_check: bool,
    pub llm_correction: bool,
    /// Downgrade a failed LLM correction to a warning.
    pub llm_best_effort: bool,
    pub correction_template: TemplateId,
    pub pdf_dpi: u32,
}

impl Default for ExtractionConfig {
    fn default() -> Self {
        Self {
            preprocessing: PreprocessConfig::default(),
            ocr_language_hint: LanguageTag::En,
            language_detection: true,
            spell_check: true,
            llm_correction: false,
            llm_best_effort: false,
            correction_template: TemplateId::CorrectOnly,
            pdf_dpi: 300,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum DocumentContent {
    Text(String),
    Bytes(Vec<u8>),
}

/// An ingested document with its detected format.
#[derive(Debug, Clone, PartialEq)]
pub struct Document {
    pub name: String,
    pub format: DocumentFormat,
    pub content: DocumentContent,
}

impl Document {
    pub fn plain_text(text: impl Into<String>) -> Self {
        Self {
            name: String::new(),
            format: DocumentFormat::PlainText,
            content: DocumentContent::Text(text.into()),
        }
    }

    pub fn from_bytes(name: impl Into<String>, bytes: Vec<u8>) -> Result<Self, TextError> {
        let name = name.into();
        let format = detect_format(&bytes, &name)?;
        let content = match format {
            DocumentFormat::PlainText => DocumentContent::Text(
                String::from_utf8(bytes).expect("detect_format checked UTF-8"),
            ),
            _ => DocumentContent::Bytes(bytes),
        };
        Ok(Self {
            name,
            format,
            content,
        })
    }

    pub fn from_raster(name: impl Into<String>, raster: &PageRaster) -> Result<Self, TextError> {
        Ok(Self {
            name: name.into(),
            format: DocumentFormat::Png,
            content: DocumentContent::Bytes(raster.to_png()?),
        })
    }
}

/// Engines and resources the extraction pipeline draws on.
#[derive(Clone, Default)]
pub struct ExtractionContext {
    pub ocr: Option<Arc<dyn OcrEngine>>,
    pub rasterizer: Option<Arc<dyn Rasterizer>>,
    pub dictionaries: HashMap<LanguageTag, Arc<SpellDictionary>>,
    pub gateway: Option<LlmGateway>,
}

impl ExtractionContext {
    /// Context with the bundled nl/en dictionaries and nothing else.
    pub fn with_builtin_dictionaries() -> Self {
        let dictionaries = LanguageTag::ALL
            .into_iter()
            .map(|l| (l, SpellDictionary::builtin(l)))
            .collect();
        Self {
            dictionaries,
            ..Self::default()
        }
    }

    pub fn with_ocr(mut self, engine: Arc<dyn OcrEngine>) -> Self {
        self.ocr = Some(engine);
        self
    }

    pub fn with_gateway(mut self, gateway: LlmGateway) -> Self {
        self.gateway = Some(gateway);
        self
    }

    pub fn with_rasterizer(mut self, rasterizer: Arc<dyn Rasterizer>) -> Self {
        self.rasterizer = Some(rasterizer);
        self
    }
}

/// Sends the text through the correction prompt and returns the reply as is.
pub fn llm_correct(
    text: &str,
    gateway: &LlmGateway,
    template: &PromptTemplate,
) -> Result<String, LlmError> {
    gateway.complete_template(template, &[("text", text)])
}

fn pages_of(
    doc: &Document,
    config: &ExtractionConfig,
    ctx: &ExtractionContext,
) -> Result<Vec<PageRaster>, TextError> {
    let DocumentContent::Bytes(bytes) = &doc.content else {
        return Err(TextError::Engine(format!(
            "{} document carries text, not image bytes",
            doc.format
        )));
    };
    if doc.format == DocumentFormat::Pdf {
        Ok(rasterize_pdf(bytes, config.pdf_dpi, ctx.rasterizer.as_deref())?)
    } else {
        Ok(vec![decode_image(bytes, doc.format)?])
    }
}

fn ocr_pages(
    pages: &[PageRaster],
    language: LanguageTag,
    engine: &dyn OcrEngine,
) -> Result<String, TextError> {
    let texts = pages
        .iter()
        .map(|p| ocr(p, language, Some(engine)).map(|r| r.text))
        .collect::<Result<Vec<_>, _>>()?;
    Ok(texts.join("\n"))
}

/// preprocess → OCR → language detection → spell check → LLM correction.
/// Plain-text documents skip the first two.
pub fn extract_text(
    doc: &Document,
    config: &ExtractionConfig,
    ctx: &ExtractionContext,
) -> Result<ExtractedText, TextError> {
    let mut stages = Vec::new();
    let mut warnings = Vec::new();
    let hint = config.ocr_language_hint;

    let (mut text, pages) = match &doc.content {
        DocumentContent::Text(t) if doc.format == DocumentFormat::PlainText => (t.clone(), None),
        _ => {
            let engine = ctx.ocr.as_deref().ok_or(TextError::AdapterUnavailable("ocr"))?;
            let mut prepared = Vec::new();
            for page in pages_of(doc, config, ctx)? {
                let outcome = preprocess(&page, &config.preprocessing)?;
                warnings.extend(outcome.warnings.iter().map(ToString::to_string));
                prepared.push(outcome.value);
            }
            let text = ocr_pages(&prepared, hint, engine)?;
            stages.push(ExtractionStage::Ocr);
            (text, Some((prepared, engine)))
        }
    };

    let mut language = hint;
    if config.language_detection {
        match LanguageDetector::builtin().detect(&text) {
            Ok(detected) => {
                language = detected;
                stages.push(ExtractionStage::LanguageDetection);
                if let Some((prepared, engine)) = &pages {
                    if detected != hint {
                        text = ocr_pages(prepared, detected, *engine)?;
                    }
                }
            }
            Err(TextError::NoAlphabeticContent) => {
                warnings.push(format!(
                    "no alphabetic content for language detection; using {hint}"
                ));
            }
            Err(e) => return Err(e),
        }
    }

    if config.spell_check {
        let dict = ctx
            .dictionaries
            .get(&language)
            .ok_or(TextError::DictionaryMissing(language))?;
        text = correct_spelling(&text, dict);
        stages.push(ExtractionStage::SpellCheck);
    }

    if config.llm_correction {
        let template = PromptTemplate::builtin(config.correction_template);
        let result = match &ctx.gateway {
            Some(g) => llm_correct(&text, g, &template),
            None => Err(LlmError::Transport("no LLM gateway configured".into())),
        };
        match result {
            Ok(corrected) => {
                text = corrected;
                stages.push(ExtractionStage::LlmCorrection);
            }
            Err(e) if config.llm_best_effort => {
                warnings.push(format!("llm correction skipped: {e}"));
            }
            Err(e) => {
                return Err(TextError::Gateway {
                    source: e,
                    partial: Box::new(ExtractedText {
                        text,
                        language,
                        stages_applied: stages,
                        warnings,
                    }),
                })
            }
        }
    }

    Ok(ExtractedText {
        text,
        language,
        stages_applied: stages,
        warnings,
    })
}
