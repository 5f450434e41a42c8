//! Text extraction: OCR, language identification, spell correction and
//! optional LLM correction.

mod language;
mod ocr;
mod pipeline;
mod spell;

pub use language::{detect_language, LanguageDetector, LanguageScores, LanguageTag};
pub use ocr::{ocr, CommandOcr, GlyphCellOcr, OcrEngine, OcrResult};
pub use pipeline::{
    extract_text, llm_correct, Document, DocumentContent, ExtractedText, ExtractionConfig,
    ExtractionContext, ExtractionStage,
};
pub use spell::{
    correct_spelling, is_protected, levenshtein, suggest, SpellDictionary, MAX_EDIT_DISTANCE,
};

use crate::imaging::ImagingError;
use crate::llm::LlmError;

#[derive(Debug, thiserror::Error)]
pub enum TextError {
    #[error("text has no alphabetic token")]
    NoAlphabeticContent,
    #[error("unknown language {0:?}")]
    UnknownLanguage(String),
    #[error("{0} adapter is not configured")]
    AdapterUnavailable(&'static str),
    #[error("OCR engine failed: {0}")]
    Engine(String),
    #[error("no dictionary loaded for {0}")]
    DictionaryMissing(LanguageTag),
    #[error("invalid dictionary: {0}")]
    InvalidDictionary(String),
    #[error("I/O error: {0}")]
    Io(String),
    #[error(transparent)]
    Imaging(#[from] ImagingError),
    #[error("LLM correction failed: {source}")]
    Gateway {
        source: LlmError,
        partial: Box<ExtractedText>,
    },
}

impl TextError {
    pub fn code(&self) -> &'static str {
        match self {
            TextError::NoAlphabeticContent => "no_alphabetic_content",
            TextError::UnknownLanguage(_) => "unknown_language",
            TextError::AdapterUnavailable(_) => "adapter_unavailable",
            TextError::Engine(_) => "engine_error",
            TextError::DictionaryMissing(_) => "dictionary_missing",
            TextError::InvalidDictionary(_) => "invalid_dictionary",
            TextError::Io(_) => "io_error",
            TextError::Imaging(ImagingError::UnsupportedFormat(_)) => "unsupported_format",
            TextError::Imaging(ImagingError::EmptyInput) => "empty_input",
            TextError::Imaging(ImagingError::Decode(_)) => "decode_error",
            TextError::Imaging(ImagingError::AdapterUnavailable(_)) => "adapter_unavailable",
            TextError::Imaging(ImagingError::Rasterize(_)) => "rasterize_error",
            TextError::Imaging(ImagingError::InvalidConfig(_)) => "invalid_config",
            TextError::Imaging(ImagingError::InvalidRaster(_)) => "invalid_raster",
            TextError::Gateway { .. } => "gateway_error",
        }
    }

    /// True for failures of an external engine or adapter.
    pub fn is_adapter_failure(&self) -> bool {
        match self {
            TextError::AdapterUnavailable(_) | TextError::Engine(_) | TextError::Gateway { .. } => {
                true
            }
            TextError::Imaging(e) => matches!(
                e,
                ImagingError::AdapterUnavailable(_) | ImagingError::Rasterize(_)
            ),
            _ => false,
        }
    }
}
