//! Document ingestion and raster preprocessing.

mod format;
mod pdf;
mod preprocess;
mod raster;

pub use format::{decode_image, detect_format, luminance, DocumentFormat};
pub use pdf::{rasterize_pdf, CommandRasterizer, Rasterizer};
pub(crate) use pdf::expand_template;
pub use preprocess::{
    apply_threshold, binarize, dark_components, dilate, erode, mask_text_region, min_area_for,
    morph_close, otsu_threshold, preprocess, resize, sharpen, Component, Kernel, Outcome,
    PreprocessConfig, PreprocessWarning, ThresholdMethod,
};
pub use raster::{BinaryRaster, PageRaster};

#[derive(Debug, thiserror::Error)]
pub enum ImagingError {
    #[error("empty input")]
    EmptyInput,
    #[error("unsupported format: {0}")]
    UnsupportedFormat(String),
    #[error("decode error: {0}")]
    Decode(String),
    #[error("{0} adapter is not configured")]
    AdapterUnavailable(&'static str),
    #[error("rasterizer failed: {0}")]
    Rasterize(String),
    #[error("invalid preprocessing config: {0}")]
    InvalidConfig(String),
    #[error("invalid raster: {0}")]
    InvalidRaster(String),
}
