//! Seeded synthetic resumes and invoice fixtures with ground truth.
//!
//! Randomness comes from SplitMix64 (`rand_xoshiro::SplitMix64`), seeded
//! per document with the document seed: the state advances by
//! `0x9E3779B97F4A7C15` and each output is the state passed through the
//! finalizer `z ^= z >> 30; z *= 0xBF58476D1CE4E5B9; z ^= z >> 27;
//! z *= 0x94D049BB133111EB; z ^= z >> 31`. Ranges, picks and shuffles use
//! the `rand` crate's algorithms on that stream, so output is fixed for a
//! given seed, pool set and locked dependency versions.

mod corpus;
pub mod glyph;
mod invoice;
mod pools;
mod resume;

use std::path::PathBuf;

pub use corpus::{
    doc_id, generate_corpus, GeneratedCorpus, GeneratedDocument, Manifest, ManifestEntry,
    GENERATOR_VERSION, ORACLE_LIST_SEPARATOR,
};
pub use glyph::{RenderLimits, TextTooLarge};
pub use invoice::{generate_invoice, iban_check_digits, InvoiceTruth};
pub use pools::{
    GeneratorPools, Section, ACADEMIC_BACKGROUNDS, OCCUPATIONS, POOL_FILES, SKILL_TITLES,
    WORK_EXPERIENCES,
};
pub use resume::{
    generate_resume, ContactLabels, LayoutDescriptor, ListStyle, RenderedDoc, ResumeTruth,
    SeparatorStyle, TitleCase,
};

use crate::imaging::PageRaster;

#[derive(Debug, thiserror::Error)]
pub enum DatasetError {
    #[error("pool {file}: {message}")]
    Pool { file: String, message: String },
    #[error("I/O error: {0}")]
    Io(String),
    #[error("corpus size must be at least 1")]
    EmptyCorpus,
    #[error("output directory {0} is not empty")]
    OutputNotEmpty(PathBuf),
    #[error(transparent)]
    TextTooLarge(#[from] TextTooLarge),
}

/// Draws the document with the built-in cell font; the glyph-cell OCR
/// engine reads it back exactly.
pub fn render_raster(doc: &RenderedDoc, limits: RenderLimits) -> Result<PageRaster, DatasetError> {
    Ok(glyph::render_text(&doc.text, limits)?)
}
