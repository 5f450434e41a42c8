use serde::{Deserialize, Serialize};

use super::{ImagingError, PageRaster};

/// Input formats accepted by the ingestion step.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DocumentFormat {
    Pdf,
    Jpg,
    Jpeg,
    Img,
    Tif,
    Png,
    PlainText,
}

impl DocumentFormat {
    pub fn is_raster(self) -> bool {
        matches!(
            self,
            DocumentFormat::Jpg
                | DocumentFormat::Jpeg
                | DocumentFormat::Img
                | DocumentFormat::Tif
                | DocumentFormat::Png
        )
    }

    pub fn as_str(self) -> &'static str {
        match self {
            DocumentFormat::Pdf => "pdf",
            DocumentFormat::Jpg => "jpg",
            DocumentFormat::Jpeg => "jpeg",
            DocumentFormat::Img => "img",
            DocumentFormat::Tif => "tif",
            DocumentFormat::Png => "png",
            DocumentFormat::PlainText => "plain_text",
        }
    }
}

impl std::fmt::Display for DocumentFormat {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.as_str())
    }
}

const PNG_MAGIC: &[u8] = b"\x89PNG\r\n\x1a\n";
const PDF_MAGIC: &[u8] = b"%PDF-";
const JPEG_MAGIC: &[u8] = &[0xFF, 0xD8, 0xFF];
const TIFF_LE: &[u8] = b"II*\0";
const TIFF_BE: &[u8] = b"MM\0*";

// Signatures of common formats we recognise but refuse.
const FOREIGN_MAGIC: &[&[u8]] = &[
    b"PK\x03\x04",
    b"GIF87a",
    b"GIF89a",
    b"BM",
    b"RIFF",
    b"\xD0\xCF\x11\xE0",
];

const FOREIGN_EXTENSIONS: &[&str] = &[
    "docx", "doc", "xlsx", "xls", "pptx", "ppt", "odt", "ods", "zip", "gif", "bmp", "webp", "rtf",
];

fn extension(hint: &str) -> Option<String> {
    let name = hint.rsplit(['/', '\\']).next().unwrap_or(hint);
    let (_, ext) = name.rsplit_once('.')?;
    Some(ext.to_ascii_lowercase())
}

fn format_from_extension(ext: &str) -> Option<DocumentFormat> {
    Some(match ext {
        "pdf" => DocumentFormat::Pdf,
        "jpg" => DocumentFormat::Jpg,
        "jpeg" => DocumentFormat::Jpeg,
        "img" => DocumentFormat::Img,
        "tif" | "tiff" => DocumentFormat::Tif,
        "png" => DocumentFormat::Png,
        _ => return None,
    })
}

/// Decides the document format from its leading bytes, falling back to the
/// filename extension, and finally to plain text for valid UTF-8 content.
pub fn detect_format(bytes: &[u8], filename_hint: &str) -> Result<DocumentFormat, ImagingError> {
    if bytes.is_empty() {
        return Err(ImagingError::EmptyInput);
    }
    let ext = extension(filename_hint);

    if bytes.starts_with(PNG_MAGIC) {
        return Ok(DocumentFormat::Png);
    }
    if bytes.starts_with(PDF_MAGIC) {
        return Ok(DocumentFormat::Pdf);
    }
    if bytes.starts_with(JPEG_MAGIC) {
        return Ok(match ext.as_deref() {
            Some("jpeg") => DocumentFormat::Jpeg,
            Some("img") => DocumentFormat::Img,
            _ => DocumentFormat::Jpg,
        });
    }
    if bytes.starts_with(TIFF_LE) || bytes.starts_with(TIFF_BE) {
        return Ok(match ext.as_deref() {
            Some("img") => DocumentFormat::Img,
            _ => DocumentFormat::Tif,
        });
    }
    if FOREIGN_MAGIC.iter().any(|m| bytes.starts_with(m)) {
        return Err(ImagingError::UnsupportedFormat(format!(
            "unrecognised binary signature for {filename_hint:?}"
        )));
    }

    if let Some(ext) = ext.as_deref() {
        if let Some(format) = format_from_extension(ext) {
            return Ok(format);
        }
        if FOREIGN_EXTENSIONS.contains(&ext) {
            return Err(ImagingError::UnsupportedFormat(format!(".{ext}")));
        }
    }
    if std::str::from_utf8(bytes).is_ok() {
        return Ok(DocumentFormat::PlainText);
    }
    Err(ImagingError::UnsupportedFormat(format!(
        "no known signature for {filename_hint:?}"
    )))
}

/// Rec. 601 luma of an RGB triple, rounded to the nearest integer.
pub fn luminance(r: u8, g: u8, b: u8) -> u8 {
    let l = 0.299 * r as f64 + 0.587 * g as f64 + 0.114 * b as f64;
    l.round().clamp(0.0, 255.0) as u8
}

/// Decodes a raster image into luminance. Transparent pixels are composited
/// over white.
pub fn decode_image(bytes: &[u8], format: DocumentFormat) -> Result<PageRaster, ImagingError> {
    let decoded = match format {
        DocumentFormat::Png => image::load_from_memory_with_format(bytes, image::ImageFormat::Png),
        DocumentFormat::Jpg | DocumentFormat::Jpeg => {
            image::load_from_memory_with_format(bytes, image::ImageFormat::Jpeg)
        }
        DocumentFormat::Tif => image::load_from_memory_with_format(bytes, image::ImageFormat::Tiff),
        DocumentFormat::Img => image::load_from_memory(bytes),
        other => {
            return Err(ImagingError::UnsupportedFormat(format!(
                "{other} is not a raster format"
            )))
        }
    }
    .map_err(|e| ImagingError::Decode(e.to_string()))?;

    let rgba = decoded.to_rgba8();
    let (w, h) = rgba.dimensions();
    let pixels = rgba
        .pixels()
        .map(|p| {
            let [r, g, b, a] = p.0;
            let l = luminance(r, g, b) as u32;
            let a = a as u32;
            ((l * a + 255 * (255 - a) + 127) / 255) as u8
        })
        .collect();
    let raster = PageRaster::new(w as usize, h as usize, pixels)?;
    Ok(match png_dpi(bytes) {
        Some(dpi) if format == DocumentFormat::Png => raster.with_dpi(dpi),
        _ => raster,
    })
}

/// Resolution from a PNG pHYs chunk. PNG stores pixels per metre, so values
/// within 0.02 of an integer dpi are snapped to it.
fn png_dpi(bytes: &[u8]) -> Option<f64> {
    let reader = png::Decoder::new(std::io::Cursor::new(bytes)).read_info().ok()?;
    let dims = reader.info().pixel_dims?;
    if dims.unit != png::Unit::Meter || dims.xppu == 0 {
        return None;
    }
    let dpi = dims.xppu as f64 * crate::imaging::raster::METRES_PER_INCH;
    Some(if (dpi - dpi.round()).abs() < 0.02 { dpi.round() } else { dpi })
}
