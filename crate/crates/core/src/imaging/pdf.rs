use std::path::Path;
use std::process::Command;

use super::{decode_image, DocumentFormat, ImagingError, PageRaster};

/// Turns PDF bytes into one raster per page.
pub trait Rasterizer: Send + Sync {
    fn rasterize(&self, pdf: &[u8], dpi: u32) -> Result<Vec<PageRaster>, ImagingError>;
}

/// Runs an external program per call.
///
/// The template is split on whitespace; `{input}`, `{dpi}` and `{outdir}` are
/// substituted inside each argument. The program must write `page-0001.png`,
/// `page-0002.png`, ... into `{outdir}`; a non-zero exit is a failure.
#[derive(Debug, Clone)]
pub struct CommandRasterizer {
    template: String,
}

impl CommandRasterizer {
    pub fn new(template: impl Into<String>) -> Result<Self, ImagingError> {
        let template = template.into();
        if template.split_whitespace().next().is_none() {
            return Err(ImagingError::InvalidConfig("empty rasterizer_cmd".into()));
        }
        Ok(Self { template })
    }
}

pub(crate) fn expand_template(template: &str, vars: &[(&str, &str)]) -> Vec<String> {
    template
        .split_whitespace()
        .map(|arg| {
            vars.iter()
                .fold(arg.to_string(), |acc, (k, v)| acc.replace(&format!("{{{k}}}"), v))
        })
        .collect()
}

fn page_number(name: &str) -> Option<u32> {
    name.strip_prefix("page-")?.strip_suffix(".png")?.parse().ok()
}

impl Rasterizer for CommandRasterizer {
    fn rasterize(&self, pdf: &[u8], dpi: u32) -> Result<Vec<PageRaster>, ImagingError> {
        let io = |e: std::io::Error| ImagingError::Rasterize(e.to_string());
        let work = tempfile::tempdir().map_err(io)?;
        let input = work.path().join("input.pdf");
        let outdir = work.path().join("pages");
        std::fs::write(&input, pdf).map_err(io)?;
        std::fs::create_dir(&outdir).map_err(io)?;

        let dpi_s = dpi.to_string();
        let args = expand_template(
            &self.template,
            &[
                ("input", &input.to_string_lossy()),
                ("dpi", &dpi_s),
                ("outdir", &outdir.to_string_lossy()),
            ],
        );
        let output = Command::new(&args[0]).args(&args[1..]).output().map_err(io)?;
        if !output.status.success() {
            let stderr = String::from_utf8_lossy(&output.stderr);
            return Err(ImagingError::Rasterize(format!(
                "rasterizer exited with {}: {}",
                output.status,
                stderr.chars().take(200).collect::<String>()
            )));
        }
        read_pages(&outdir, dpi)
    }
}

fn read_pages(dir: &Path, dpi: u32) -> Result<Vec<PageRaster>, ImagingError> {
    let mut pages: Vec<(u32, std::path::PathBuf)> = std::fs::read_dir(dir)
        .map_err(|e| ImagingError::Rasterize(e.to_string()))?
        .filter_map(|entry| {
            let path = entry.ok()?.path();
            let n = page_number(path.file_name()?.to_str()?)?;
            Some((n, path))
        })
        .collect();
    pages.sort_by_key(|(n, _)| *n);
    pages
        .into_iter()
        .map(|(_, path)| {
            let bytes =
                std::fs::read(&path).map_err(|e| ImagingError::Rasterize(e.to_string()))?;
            Ok(decode_image(&bytes, DocumentFormat::Png)?.with_dpi(dpi as f64))
        })
        .collect()
}

/// Rasterizes a PDF through the configured adapter.
pub fn rasterize_pdf(
    bytes: &[u8],
    dpi: u32,
    adapter: Option<&dyn Rasterizer>,
) -> Result<Vec<PageRaster>, ImagingError> {
    let adapter = adapter.ok_or(ImagingError::AdapterUnavailable("pdf rasterizer"))?;
    adapter.rasterize(bytes, dpi)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn missing_adapter() {
        assert!(matches!(
            rasterize_pdf(b"%PDF-1.4", 300, None),
            Err(ImagingError::AdapterUnavailable(_))
        ));
    }

    #[test]
    fn template_expansion() {
        let args = expand_template(
            "pdftoppm -r {dpi} -png {input} {outdir}/page",
            &[("dpi", "300"), ("input", "/a.pdf"), ("outdir", "/o")],
        );
        assert_eq!(args, ["pdftoppm", "-r", "300", "-png", "/a.pdf", "/o/page"]);
    }

    #[test]
    fn page_names() {
        assert_eq!(page_number("page-0002.png"), Some(2));
        assert_eq!(page_number("page-x.png"), None);
        assert_eq!(page_number("other.png"), None);
    }

    #[test]
    fn failing_command_is_rasterize_error() {
        let r = CommandRasterizer::new("false {input}").unwrap();
        assert!(matches!(
            r.rasterize(b"%PDF-1.4", 72),
            Err(ImagingError::Rasterize(_))
        ));
    }

    #[test]
    fn zero_pages_is_empty() {
        let r = CommandRasterizer::new("true {input} {outdir}").unwrap();
        assert!(r.rasterize(b"%PDF-1.4", 72).unwrap().is_empty());
    }
}
