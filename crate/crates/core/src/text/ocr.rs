use std::process::Command;

use serde::{Deserialize, Serialize};

use super::{LanguageTag, TextError};
use crate::dataset::glyph;
use crate::imaging::{expand_template, PageRaster};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OcrResult {
    pub text: String,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub mean_confidence: Option<f64>,
    pub engine_id: String,
}

/// An OCR engine taking a language hint.
pub trait OcrEngine: Send + Sync {
    fn id(&self) -> &str;
    fn recognize(&self, raster: &PageRaster, language: LanguageTag) -> Result<OcrResult, TextError>;
}

/// Reads rasters drawn with the built-in cell font. Exact on its own output.
#[derive(Debug, Clone, Copy, Default)]
pub struct GlyphCellOcr;

impl OcrEngine for GlyphCellOcr {
    fn id(&self) -> &str {
        "glyph-cell-stub"
    }

    fn recognize(&self, raster: &PageRaster, _language: LanguageTag) -> Result<OcrResult, TextError> {
        let reading = glyph::read_cells(raster);
        let confidence = if reading.cells == 0 {
            1.0
        } else {
            1.0 - reading.invalid_cells as f64 / reading.cells as f64
        };
        Ok(OcrResult {
            text: reading.text,
            mean_confidence: Some(confidence),
            engine_id: self.id().to_string(),
        })
    }
}

/// Runs an external OCR program: the page is written to a temporary PNG and
/// `{image}`, `{lang}` (`nl`/`en`) and `{lang3}` (`nld`/`eng`) are
/// substituted into the whitespace-split template. Recognised text is read
/// from stdout.
#[derive(Debug, Clone)]
pub struct CommandOcr {
    template: String,
}

impl CommandOcr {
    pub fn new(template: impl Into<String>) -> Result<Self, TextError> {
        let template = template.into();
        if template.split_whitespace().next().is_none() {
            return Err(TextError::Engine("empty OCR command".into()));
        }
        Ok(Self { template })
    }
}

fn lang3(language: LanguageTag) -> &'static str {
    match language {
        LanguageTag::Nl => "nld",
        LanguageTag::En => "eng",
    }
}

impl OcrEngine for CommandOcr {
    fn id(&self) -> &str {
        &self.template
    }

    fn recognize(&self, raster: &PageRaster, language: LanguageTag) -> Result<OcrResult, TextError> {
        let engine = |e: String| TextError::Engine(e);
        let dir = tempfile::tempdir().map_err(|e| engine(e.to_string()))?;
        let image = dir.path().join("page.png");
        let png = raster.to_png()?;
        std::fs::write(&image, png).map_err(|e| engine(e.to_string()))?;
        let args = expand_template(
            &self.template,
            &[
                ("image", &image.to_string_lossy()),
                ("lang", language.code()),
                ("lang3", lang3(language)),
            ],
        );
        let output = Command::new(&args[0])
            .args(&args[1..])
            .output()
            .map_err(|e| engine(format!("{}: {e}", args[0])))?;
        if !output.status.success() {
            return Err(engine(format!(
                "OCR command exited with {}: {}",
                output.status,
                String::from_utf8_lossy(&output.stderr).chars().take(200).collect::<String>()
            )));
        }
        let text = String::from_utf8(output.stdout)
            .map_err(|_| engine("OCR output is not UTF-8".into()))?;
        Ok(OcrResult {
            text,
            mean_confidence: None,
            engine_id: self.id().to_string(),
        })
    }
}

/// Invokes the configured engine with the language hint; the text is returned
/// as the engine produced it.
pub fn ocr(
    raster: &PageRaster,
    language: LanguageTag,
    engine: Option<&dyn OcrEngine>,
) -> Result<OcrResult, TextError> {
    let engine = engine.ok_or(TextError::AdapterUnavailable("ocr"))?;
    let result = engine.recognize(raster, language)?;
    if let Some(c) = result.mean_confidence {
        if !(0.0..=1.0).contains(&c) {
            return Err(TextError::Engine(format!("confidence {c} outside [0, 1]")));
        }
    }
    Ok(result)
}
