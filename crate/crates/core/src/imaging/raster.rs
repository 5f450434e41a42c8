use super::ImagingError;

/// Row-major 8-bit luminance image.
#[derive(Debug, Clone, PartialEq)]
pub struct PageRaster {
    width: usize,
    height: usize,
    pixels: Vec<u8>,
    dpi: Option<f64>,
}

impl PageRaster {
    pub fn new(width: usize, height: usize, pixels: Vec<u8>) -> Result<Self, ImagingError> {
        if width == 0 || height == 0 {
            return Err(ImagingError::InvalidRaster(format!(
                "dimensions must be positive, got {width}x{height}"
            )));
        }
        if pixels.len() != width * height {
            return Err(ImagingError::InvalidRaster(format!(
                "expected {} pixels for {width}x{height}, got {}",
                width * height,
                pixels.len()
            )));
        }
        Ok(Self {
            width,
            height,
            pixels,
            dpi: None,
        })
    }

    /// A raster where every pixel has the same value.
    pub fn filled(width: usize, height: usize, value: u8) -> Result<Self, ImagingError> {
        Self::new(width, height, vec![value; width * height])
    }

    pub fn with_dpi(mut self, dpi: f64) -> Self {
        self.dpi = Some(dpi);
        self
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn dpi(&self) -> Option<f64> {
        self.dpi
    }

    pub fn pixels(&self) -> &[u8] {
        &self.pixels
    }

    pub fn into_pixels(self) -> Vec<u8> {
        self.pixels
    }

    #[inline]
    pub fn get(&self, x: usize, y: usize) -> u8 {
        self.pixels[y * self.width + x]
    }

    #[inline]
    pub fn set(&mut self, x: usize, y: usize, value: u8) {
        self.pixels[y * self.width + x] = value;
    }

    pub(crate) fn with_pixels(&self, pixels: Vec<u8>) -> Self {
        debug_assert_eq!(pixels.len(), self.pixels.len());
        Self {
            width: self.width,
            height: self.height,
            pixels,
            dpi: self.dpi,
        }
    }

    pub(crate) fn set_dpi(&mut self, dpi: Option<f64>) {
        self.dpi = dpi;
    }

    /// Number of pixels that are pure black.
    pub fn dark_pixel_count(&self) -> usize {
        self.pixels.iter().filter(|&&p| p == 0).count()
    }

    /// Encodes the raster as an 8-bit grayscale PNG. A known dpi is stored in
    /// the pHYs chunk.
    pub fn to_png(&self) -> Result<Vec<u8>, ImagingError> {
        let err = |e: png::EncodingError| ImagingError::Decode(e.to_string());
        let mut out = Vec::new();
        let mut encoder = png::Encoder::new(&mut out, self.width as u32, self.height as u32);
        encoder.set_color(png::ColorType::Grayscale);
        encoder.set_depth(png::BitDepth::Eight);
        if let Some(dpi) = self.dpi {
            let ppm = (dpi / METRES_PER_INCH).round() as u32;
            encoder.set_pixel_dims(Some(png::PixelDimensions {
                xppu: ppm,
                yppu: ppm,
                unit: png::Unit::Meter,
            }));
        }
        let mut writer = encoder.write_header().map_err(err)?;
        writer.write_image_data(&self.pixels).map_err(err)?;
        writer.finish().map_err(err)?;
        Ok(out)
    }
}

pub(crate) const METRES_PER_INCH: f64 = 0.0254;

/// A raster whose pixels are all exactly 0 or 255.
#[derive(Debug, Clone, PartialEq)]
pub struct BinaryRaster(PageRaster);

impl BinaryRaster {
    pub fn as_raster(&self) -> &PageRaster {
        &self.0
    }

    pub fn into_raster(self) -> PageRaster {
        self.0
    }

    pub fn width(&self) -> usize {
        self.0.width
    }

    pub fn height(&self) -> usize {
        self.0.height
    }

    pub fn pixels(&self) -> &[u8] {
        &self.0.pixels
    }

    #[inline]
    pub fn is_dark(&self, x: usize, y: usize) -> bool {
        self.0.get(x, y) == 0
    }

    pub fn dark_pixel_count(&self) -> usize {
        self.0.dark_pixel_count()
    }

    pub(crate) fn from_raster_unchecked(raster: PageRaster) -> Self {
        debug_assert!(raster.pixels.iter().all(|&p| p == 0 || p == 255));
        Self(raster)
    }
}

impl TryFrom<PageRaster> for BinaryRaster {
    type Error = ImagingError;

    fn try_from(raster: PageRaster) -> Result<Self, Self::Error> {
        if let Some(p) = raster.pixels.iter().find(|&&p| p != 0 && p != 255) {
            return Err(ImagingError::InvalidRaster(format!(
                "binary raster contains value {p}"
            )));
        }
        Ok(Self(raster))
    }
}

impl From<BinaryRaster> for PageRaster {
    fn from(b: BinaryRaster) -> Self {
        b.0
    }
}
