//! Raster preparation ahead of OCR.
//!
//! The pipeline runs, in order: resize, binary threshold, closing of the dark
//! text (erosion of the luminance image followed by dilation), contour mask
//! around the text area, and a sharpening filter.

use serde::{Deserialize, Serialize};

use super::{BinaryRaster, ImagingError, PageRaster};

/// Non-fatal conditions raised while preprocessing.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PreprocessWarning {
    /// Otsu was asked to split a single-valued histogram; level 128 was used.
    DegenerateHistogram,
    /// No connected component passed the area filter; the mask was skipped.
    EmptyMask,
}

impl std::fmt::Display for PreprocessWarning {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            PreprocessWarning::DegenerateHistogram => {
                f.write_str("degenerate histogram: fell back to fixed threshold 128")
            }
            PreprocessWarning::EmptyMask => {
                f.write_str("empty mask: no text component passed the area filter")
            }
        }
    }
}

/// A value plus the warnings produced while computing it.
#[derive(Debug, Clone, PartialEq)]
pub struct Outcome<T> {
    pub value: T,
    pub warnings: Vec<PreprocessWarning>,
}

impl<T> Outcome<T> {
    fn clean(value: T) -> Self {
        Self {
            value,
            warnings: Vec::new(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ThresholdMethod {
    Otsu,
    Fixed(u8),
}

/// Rectangular structuring element. Both sides must be odd.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Kernel {
    pub width: usize,
    pub height: usize,
}

impl Kernel {
    pub fn new(width: usize, height: usize) -> Result<Self, ImagingError> {
        for side in [width, height] {
            if side == 0 || side % 2 == 0 {
                return Err(ImagingError::InvalidConfig(format!(
                    "kernel sides must be odd and >= 1, got {width}x{height}"
                )));
            }
        }
        Ok(Self { width, height })
    }

    pub fn square(size: usize) -> Result<Self, ImagingError> {
        Self::new(size, size)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PreprocessConfig {
    pub resize_factor: f64,
    pub binarize_enabled: bool,
    pub threshold_method: ThresholdMethod,
    pub close_enabled: bool,
    pub kernel: usize,
    pub mask_enabled: bool,
    /// Minimum component area for the text mask, as a fraction of the image area.
    pub mask_min_area_fraction: f64,
    pub sharpen_enabled: bool,
}

impl Default for PreprocessConfig {
    fn default() -> Self {
        Self {
            resize_factor: 2.0,
            binarize_enabled: true,
            threshold_method: ThresholdMethod::Otsu,
            close_enabled: true,
            kernel: 3,
            mask_enabled: true,
            mask_min_area_fraction: 0.0001,
            sharpen_enabled: true,
        }
    }
}

impl PreprocessConfig {
    /// Every stage off and a unit resize: preprocessing becomes the identity.
    pub fn identity() -> Self {
        Self {
            resize_factor: 1.0,
            binarize_enabled: false,
            threshold_method: ThresholdMethod::Otsu,
            close_enabled: false,
            kernel: 1,
            mask_enabled: false,
            mask_min_area_fraction: 0.0001,
            sharpen_enabled: false,
        }
    }

    pub fn validate(&self) -> Result<(), ImagingError> {
        if !(self.resize_factor.is_finite() && self.resize_factor > 0.0) {
            return Err(ImagingError::InvalidConfig(format!(
                "resize_factor must be > 0, got {}",
                self.resize_factor
            )));
        }
        Kernel::square(self.kernel)?;
        if !(0.0..=1.0).contains(&self.mask_min_area_fraction) {
            return Err(ImagingError::InvalidConfig(
                "mask_min_area_fraction must lie in [0, 1]".into(),
            ));
        }
        if (self.close_enabled || self.mask_enabled) && !self.binarize_enabled {
            return Err(ImagingError::InvalidConfig(
                "closing and masking operate on binarized input; enable binarize".into(),
            ));
        }
        Ok(())
    }
}

/// Bilinear resampling with pixel-centre alignment. Output sides are the
/// input sides times `factor`, rounded, and at least 1.
pub fn resize(raster: &PageRaster, factor: f64) -> Result<PageRaster, ImagingError> {
    if !(factor.is_finite() && factor > 0.0) {
        return Err(ImagingError::InvalidConfig(format!(
            "resize factor must be > 0, got {factor}"
        )));
    }
    let (w, h) = (raster.width(), raster.height());
    let nw = ((w as f64 * factor).round() as usize).max(1);
    let nh = ((h as f64 * factor).round() as usize).max(1);
    if nw == w && nh == h {
        return Ok(raster.clone());
    }
    let sx = w as f64 / nw as f64;
    let sy = h as f64 / nh as f64;

    // Horizontal taps are shared by every row.
    let taps_x: Vec<(usize, usize, f64)> = (0..nw)
        .map(|x| source_taps(x, sx, w))
        .collect();
    let src = raster.pixels();
    let mut out = Vec::with_capacity(nw * nh);
    for y in 0..nh {
        let (y0, y1, ty) = source_taps(y, sy, h);
        let row0 = &src[y0 * w..(y0 + 1) * w];
        let row1 = &src[y1 * w..(y1 + 1) * w];
        for &(x0, x1, tx) in &taps_x {
            let top = row0[x0] as f64 * (1.0 - tx) + row0[x1] as f64 * tx;
            let bottom = row1[x0] as f64 * (1.0 - tx) + row1[x1] as f64 * tx;
            let v = top * (1.0 - ty) + bottom * ty;
            out.push(v.round().clamp(0.0, 255.0) as u8);
        }
    }
    let mut resized = PageRaster::new(nw, nh, out)?;
    resized.set_dpi(raster.dpi().map(|d| d * nw as f64 / w as f64));
    Ok(resized)
}

fn source_taps(dst: usize, scale: f64, len: usize) -> (usize, usize, f64) {
    let s = ((dst as f64 + 0.5) * scale - 0.5).clamp(0.0, (len - 1) as f64);
    let i0 = s.floor() as usize;
    let i1 = (i0 + 1).min(len - 1);
    (i0, i1, s - i0 as f64)
}

/// Otsu's threshold: the level `t` maximising between-class variance when
/// the classes are `p < t` and `p >= t`. Returns `None` for single-valued
/// histograms. Ties resolve to the smallest level.
pub fn otsu_threshold(raster: &PageRaster) -> Option<u8> {
    let mut hist = [0u64; 256];
    for &p in raster.pixels() {
        hist[p as usize] += 1;
    }
    let n = raster.pixels().len() as f64;
    let total: f64 = hist
        .iter()
        .enumerate()
        .map(|(v, &c)| v as f64 * c as f64)
        .sum();

    let mut best: Option<(u8, f64)> = None;
    let (mut n0, mut s0) = (0.0f64, 0.0f64);
    for t in 1..=255usize {
        n0 += hist[t - 1] as f64;
        s0 += (t - 1) as f64 * hist[t - 1] as f64;
        let n1 = n - n0;
        if n0 == 0.0 || n1 == 0.0 {
            continue;
        }
        let diff = s0 * n - total * n0;
        let score = diff * diff / (n0 * n1);
        if best.is_none_or(|(_, b)| score > b) {
            best = Some((t as u8, score));
        }
    }
    best.filter(|&(_, s)| s > 0.0).map(|(t, _)| t)
}

/// Maps pixels at or above the threshold to 255 and the rest to 0.
pub fn binarize(
    raster: &PageRaster,
    method: ThresholdMethod,
) -> Outcome<BinaryRaster> {
    let mut warnings = Vec::new();
    let level = match method {
        ThresholdMethod::Fixed(level) => level,
        ThresholdMethod::Otsu => otsu_threshold(raster).unwrap_or_else(|| {
            warnings.push(PreprocessWarning::DegenerateHistogram);
            128
        }),
    };
    Outcome {
        value: apply_threshold(raster, level),
        warnings,
    }
}

pub fn apply_threshold(raster: &PageRaster, level: u8) -> BinaryRaster {
    let pixels = raster
        .pixels()
        .iter()
        .map(|&p| if p >= level { 255 } else { 0 })
        .collect();
    BinaryRaster::from_raster_unchecked(raster.with_pixels(pixels))
}

// Sliding min/max over a window clipped to the image. Clipping pads with the
// neutral element of each operation, so the border behaves as background for
// erosion and never manufactures dark pixels.
fn window_filter(
    pixels: &[u8],
    width: usize,
    height: usize,
    kernel: Kernel,
    pick: fn(u8, u8) -> u8,
) -> Vec<u8> {
    let rx = kernel.width / 2;
    let ry = kernel.height / 2;
    let mut horizontal = vec![0u8; pixels.len()];
    for y in 0..height {
        let row = &pixels[y * width..(y + 1) * width];
        for x in 0..width {
            let lo = x.saturating_sub(rx);
            let hi = (x + rx).min(width - 1);
            horizontal[y * width + x] = row[lo..=hi].iter().copied().reduce(pick).unwrap();
        }
    }
    if ry == 0 {
        return horizontal;
    }
    let mut out = vec![0u8; pixels.len()];
    for y in 0..height {
        let lo = y.saturating_sub(ry);
        let hi = (y + ry).min(height - 1);
        for x in 0..width {
            let mut acc = horizontal[lo * width + x];
            for yy in lo + 1..=hi {
                acc = pick(acc, horizontal[yy * width + x]);
            }
            out[y * width + x] = acc;
        }
    }
    out
}

/// Erodes the luminance image: dark regions grow.
pub fn erode(binary: &BinaryRaster, kernel: Kernel) -> BinaryRaster {
    let r = binary.as_raster();
    let px = window_filter(r.pixels(), r.width(), r.height(), kernel, u8::min);
    BinaryRaster::from_raster_unchecked(r.with_pixels(px))
}

/// Dilates the luminance image: dark regions shrink.
pub fn dilate(binary: &BinaryRaster, kernel: Kernel) -> BinaryRaster {
    let r = binary.as_raster();
    let px = window_filter(r.pixels(), r.width(), r.height(), kernel, u8::max);
    BinaryRaster::from_raster_unchecked(r.with_pixels(px))
}

/// Morphological closing of the dark text: erosion then dilation of the
/// luminance image with the same structuring element.
pub fn morph_close(binary: &BinaryRaster, kernel: Kernel) -> BinaryRaster {
    dilate(&erode(binary, kernel), kernel)
}

/// Pixel-area threshold derived from a fraction of the image area.
pub fn min_area_for(binary: &BinaryRaster, fraction: f64) -> usize {
    let area = (binary.width() * binary.height()) as f64;
    ((area * fraction).ceil() as usize).max(1)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Component {
    pub area: usize,
    pub min_x: usize,
    pub min_y: usize,
    pub max_x: usize,
    pub max_y: usize,
}

/// 8-connected components of dark pixels, in raster-scan order of their
/// first pixel.
pub fn dark_components(binary: &BinaryRaster) -> Vec<Component> {
    let (w, h) = (binary.width(), binary.height());
    let px = binary.pixels();
    let mut seen = vec![false; px.len()];
    let mut stack = Vec::new();
    let mut components = Vec::new();
    for start in 0..px.len() {
        if px[start] != 0 || seen[start] {
            continue;
        }
        seen[start] = true;
        stack.push(start);
        let mut c = Component {
            area: 0,
            min_x: usize::MAX,
            min_y: usize::MAX,
            max_x: 0,
            max_y: 0,
        };
        while let Some(i) = stack.pop() {
            let (x, y) = (i % w, i / w);
            c.area += 1;
            c.min_x = c.min_x.min(x);
            c.max_x = c.max_x.max(x);
            c.min_y = c.min_y.min(y);
            c.max_y = c.max_y.max(y);
            for ny in y.saturating_sub(1)..=(y + 1).min(h - 1) {
                for nx in x.saturating_sub(1)..=(x + 1).min(w - 1) {
                    let j = ny * w + nx;
                    if px[j] == 0 && !seen[j] {
                        seen[j] = true;
                        stack.push(j);
                    }
                }
            }
        }
        components.push(c);
    }
    components
}

/// Whitens everything outside the bounding box of the dark components whose
/// area is at least `min_area`.
pub fn mask_text_region(binary: &BinaryRaster, min_area: usize) -> Outcome<BinaryRaster> {
    let kept: Vec<Component> = dark_components(binary)
        .into_iter()
        .filter(|c| c.area >= min_area)
        .collect();
    if kept.is_empty() {
        return Outcome {
            value: binary.clone(),
            warnings: vec![PreprocessWarning::EmptyMask],
        };
    }
    let min_x = kept.iter().map(|c| c.min_x).min().unwrap();
    let max_x = kept.iter().map(|c| c.max_x).max().unwrap();
    let min_y = kept.iter().map(|c| c.min_y).min().unwrap();
    let max_y = kept.iter().map(|c| c.max_y).max().unwrap();

    let r = binary.as_raster();
    let w = r.width();
    let mut px = r.pixels().to_vec();
    for (i, p) in px.iter_mut().enumerate() {
        let (x, y) = (i % w, i / w);
        if x < min_x || x > max_x || y < min_y || y > max_y {
            *p = 255;
        }
    }
    Outcome::clean(BinaryRaster::from_raster_unchecked(r.with_pixels(px)))
}

/// 3x3 sharpening convolution `[[0,-1,0],[-1,5,-1],[0,-1,0]]` with replicated
/// borders, clamped to 0..=255.
pub fn sharpen(raster: &PageRaster) -> PageRaster {
    let (w, h) = (raster.width(), raster.height());
    let px = raster.pixels();
    let at = |x: usize, y: usize| px[y * w + x] as i32;
    let mut out = Vec::with_capacity(px.len());
    for y in 0..h {
        let up = y.saturating_sub(1);
        let down = (y + 1).min(h - 1);
        for x in 0..w {
            let left = x.saturating_sub(1);
            let right = (x + 1).min(w - 1);
            let v = 5 * at(x, y) - at(x, up) - at(x, down) - at(left, y) - at(right, y);
            out.push(v.clamp(0, 255) as u8);
        }
    }
    raster.with_pixels(out)
}

/// Runs the enabled stages in order and returns the raster handed to OCR.
pub fn preprocess(
    raster: &PageRaster,
    config: &PreprocessConfig,
) -> Result<Outcome<PageRaster>, ImagingError> {
    config.validate()?;
    let kernel = Kernel::square(config.kernel)?;
    let mut warnings = Vec::new();

    let resized = resize(raster, config.resize_factor)?;
    if !config.binarize_enabled {
        let value = if config.sharpen_enabled {
            sharpen(&resized)
        } else {
            resized
        };
        return Ok(Outcome { value, warnings });
    }

    let mut binary = binarize(&resized, config.threshold_method);
    warnings.append(&mut binary.warnings);
    let mut binary = binary.value;
    if config.close_enabled {
        binary = morph_close(&binary, kernel);
    }
    if config.mask_enabled {
        let min_area = min_area_for(&binary, config.mask_min_area_fraction);
        let mut masked = mask_text_region(&binary, min_area);
        warnings.append(&mut masked.warnings);
        binary = masked.value;
    }
    let mut value = binary.into_raster();
    if config.sharpen_enabled {
        value = sharpen(&value);
    }
    Ok(Outcome { value, warnings })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn raster(w: usize, h: usize, px: &[u8]) -> PageRaster {
        PageRaster::new(w, h, px.to_vec()).unwrap()
    }

    fn binary(w: usize, h: usize, px: &[u8]) -> BinaryRaster {
        BinaryRaster::try_from(raster(w, h, px)).unwrap()
    }

    // Reference erosion/dilation straight from the definition: the window is
    // every in-bounds pixel within the kernel's reach.
    fn reference_close(b: &BinaryRaster, kw: usize, kh: usize) -> Vec<u8> {
        let (w, h) = (b.width() as i64, b.height() as i64);
        let (rx, ry) = ((kw / 2) as i64, (kh / 2) as i64);
        let apply = |src: &[u8], take_min: bool| -> Vec<u8> {
            let mut out = vec![0u8; src.len()];
            for y in 0..h {
                for x in 0..w {
                    let mut vals = Vec::new();
                    for dy in -ry..=ry {
                        for dx in -rx..=rx {
                            let (nx, ny) = (x + dx, y + dy);
                            if nx >= 0 && ny >= 0 && nx < w && ny < h {
                                vals.push(src[(ny * w + nx) as usize]);
                            }
                        }
                    }
                    out[(y * w + x) as usize] = if take_min {
                        *vals.iter().min().unwrap()
                    } else {
                        *vals.iter().max().unwrap()
                    };
                }
            }
            out
        };
        let eroded = apply(b.pixels(), true);
        apply(&eroded, false)
    }

    #[test]
    fn resize_dimensions_and_identity() {
        let r = PageRaster::filled(10, 10, 7).unwrap();
        let up = resize(&r, 2.0).unwrap();
        assert_eq!((up.width(), up.height()), (20, 20));

        let px: Vec<u8> = (0..12).map(|i| (i * 20) as u8).collect();
        let r = raster(4, 3, &px);
        assert_eq!(resize(&r, 1.0).unwrap(), r);
    }

    #[test]
    fn resize_constant_field_stays_constant() {
        let r = PageRaster::filled(3, 3, 128).unwrap();
        let up = resize(&r, 2.0).unwrap();
        assert_eq!((up.width(), up.height()), (6, 6));
        assert!(up.pixels().iter().all(|&p| p == 128));
    }

    #[test]
    fn resize_rejects_non_positive_factor() {
        let r = PageRaster::filled(3, 3, 1).unwrap();
        assert!(resize(&r, 0.0).is_err());
        assert!(resize(&r, -1.0).is_err());
        assert_eq!(resize(&r, 0.01).unwrap().width(), 1);
    }

    #[test]
    fn resize_scales_dpi() {
        let r = PageRaster::filled(10, 10, 0).unwrap().with_dpi(72.0);
        assert_eq!(resize(&r, 2.0).unwrap().dpi(), Some(144.0));
    }

    #[test]
    fn fixed_threshold() {
        let r = raster(2, 1, &[200, 60]);
        let b = binarize(&r, ThresholdMethod::Fixed(128));
        assert_eq!(b.value.pixels(), &[255, 0]);
        let white = PageRaster::filled(4, 4, 255).unwrap();
        let b = binarize(&white, ThresholdMethod::Fixed(128));
        assert!(b.value.pixels().iter().all(|&p| p == 255));
        assert!(b.warnings.is_empty());
    }

    // Brute force: evaluate the between-class variance of every cut directly
    // from class means and weights.
    fn brute_force_otsu(px: &[u8]) -> Vec<u8> {
        let n = px.len() as f64;
        let mut scores = Vec::new();
        for t in 1..=255u16 {
            let (lo, hi): (Vec<f64>, Vec<f64>) = {
                let lo: Vec<f64> = px.iter().filter(|&&p| (p as u16) < t).map(|&p| p as f64).collect();
                let hi: Vec<f64> = px.iter().filter(|&&p| (p as u16) >= t).map(|&p| p as f64).collect();
                (lo, hi)
            };
            if lo.is_empty() || hi.is_empty() {
                continue;
            }
            let m0 = lo.iter().sum::<f64>() / lo.len() as f64;
            let m1 = hi.iter().sum::<f64>() / hi.len() as f64;
            let var = (lo.len() as f64 / n) * (hi.len() as f64 / n) * (m0 - m1).powi(2);
            scores.push((t as u8, var));
        }
        let best = scores.iter().map(|s| s.1).fold(f64::MIN, f64::max);
        scores
            .into_iter()
            .filter(|s| (s.1 - best).abs() <= best * 1e-12)
            .map(|s| s.0)
            .collect()
    }

    #[test]
    fn otsu_splits_bimodal_fixture() {
        let mut px = vec![40u8; 32];
        px.extend(vec![210u8; 32]);
        let r = raster(8, 8, &px);
        let optimal = brute_force_otsu(&px);
        assert_eq!(optimal.first(), Some(&41));
        assert_eq!(optimal.last(), Some(&210));
        let t = otsu_threshold(&r).unwrap();
        assert!(optimal.contains(&t));
        assert!(t > 40 && t <= 210);
        let b = binarize(&r, ThresholdMethod::Otsu).value;
        assert_eq!(&b.pixels()[..32], &[0u8; 32][..]);
        assert_eq!(&b.pixels()[32..], &[255u8; 32][..]);
    }

    #[test]
    fn otsu_matches_brute_force_on_skewed_histogram() {
        let px: Vec<u8> = (0..100u32).map(|i| ((i * i * 7 + 13) % 251) as u8).collect();
        let r = raster(10, 10, &px);
        let t = otsu_threshold(&r).unwrap();
        assert!(brute_force_otsu(&px).contains(&t));
    }

    #[test]
    fn otsu_on_constant_image_warns() {
        let r = PageRaster::filled(5, 5, 90).unwrap();
        let b = binarize(&r, ThresholdMethod::Otsu);
        assert_eq!(b.warnings, vec![PreprocessWarning::DegenerateHistogram]);
        // Fixed level 128: 90 < 128.
        assert!(b.value.pixels().iter().all(|&p| p == 0));
    }

    #[test]
    fn closing_identities() {
        let k = Kernel::square(3).unwrap();
        let white = binary(4, 4, &[255; 16]);
        assert_eq!(morph_close(&white, k), white);
        let black = binary(4, 4, &[0; 16]);
        assert_eq!(morph_close(&black, k), black);
    }

    #[test]
    fn closing_fills_single_pixel_gap() {
        let row = binary(3, 1, &[0, 255, 0]);
        let k = Kernel::new(3, 1).unwrap();
        let closed = morph_close(&row, k);
        assert_eq!(closed.pixels(), &reference_close(&row, 3, 1)[..]);
        assert_eq!(closed.pixels(), &[0, 0, 0]);
    }

    #[test]
    fn closing_matches_reference_on_pattern() {
        let px: Vec<u8> = (0..63u32)
            .map(|i| if (i * 37 + i / 5) % 3 == 0 { 0 } else { 255 })
            .collect();
        let b = binary(9, 7, &px);
        for (kw, kh) in [(1, 1), (3, 3), (5, 3), (3, 5)] {
            let k = Kernel::new(kw, kh).unwrap();
            assert_eq!(morph_close(&b, k).pixels(), &reference_close(&b, kw, kh)[..]);
        }
    }

    #[test]
    fn kernel_must_be_odd() {
        assert!(Kernel::square(2).is_err());
        assert!(Kernel::square(0).is_err());
        assert!(Kernel::new(3, 1).is_ok());
    }

    // Oracle: label components by repeated flood relabelling until stable.
    fn brute_force_labels(b: &BinaryRaster) -> Vec<usize> {
        let (w, h) = (b.width(), b.height());
        let mut label: Vec<usize> = (0..w * h).collect();
        loop {
            let mut changed = false;
            for y in 0..h {
                for x in 0..w {
                    if !b.is_dark(x, y) {
                        continue;
                    }
                    for dy in -1i64..=1 {
                        for dx in -1i64..=1 {
                            let (nx, ny) = (x as i64 + dx, y as i64 + dy);
                            if nx < 0 || ny < 0 || nx >= w as i64 || ny >= h as i64 {
                                continue;
                            }
                            let j = ny as usize * w + nx as usize;
                            if b.pixels()[j] == 0 && label[j] < label[y * w + x] {
                                label[y * w + x] = label[j];
                                changed = true;
                            }
                        }
                    }
                }
            }
            if !changed {
                return label;
            }
        }
    }

    #[test]
    fn mask_keeps_only_large_block_bbox() {
        // 12x10 image: a 4x4 block at (1..5, 1..5) and a single pixel at (10, 8).
        let (w, h) = (12, 10);
        let mut px = vec![255u8; w * h];
        for y in 1..5 {
            for x in 1..5 {
                px[y * w + x] = 0;
            }
        }
        px[8 * w + 10] = 0;
        let b = binary(w, h, &px);

        let labels = brute_force_labels(&b);
        let mut areas = std::collections::BTreeMap::new();
        for (i, &p) in b.pixels().iter().enumerate() {
            if p == 0 {
                *areas.entry(labels[i]).or_insert(0usize) += 1;
            }
        }
        assert_eq!(areas.values().copied().collect::<Vec<_>>(), vec![16, 1]);
        let mut found: Vec<usize> = dark_components(&b).iter().map(|c| c.area).collect();
        found.sort_unstable();
        assert_eq!(found, vec![1, 16]);

        let masked = mask_text_region(&b, 2);
        assert!(masked.warnings.is_empty());
        let m = masked.value;
        assert_eq!(m.dark_pixel_count(), 16);
        assert!(!m.is_dark(10, 8));
        for y in 1..5 {
            for x in 1..5 {
                assert!(m.is_dark(x, y));
            }
        }
    }

    #[test]
    fn mask_on_blank_image_warns_and_returns_input() {
        let b = binary(5, 5, &[255; 25]);
        let masked = mask_text_region(&b, 1);
        assert_eq!(masked.warnings, vec![PreprocessWarning::EmptyMask]);
        assert_eq!(masked.value, b);
    }

    #[test]
    fn mask_single_block_whitens_outside() {
        let (w, h) = (6, 6);
        let mut px = vec![255u8; w * h];
        px[2 * w + 2] = 0;
        px[3 * w + 3] = 0;
        let b = binary(w, h, &px);
        let m = mask_text_region(&b, 1).value;
        for y in 0..h {
            for x in 0..w {
                if !(2..=3).contains(&x) || !(2..=3).contains(&y) {
                    assert!(!m.is_dark(x, y));
                }
            }
        }
    }

    #[test]
    fn sharpen_cases() {
        let c = PageRaster::filled(4, 3, 128).unwrap();
        assert_eq!(sharpen(&c), c);

        let one = raster(1, 1, &[77]);
        assert_eq!(sharpen(&one), one);

        let mut px = vec![0u8; 9];
        px[4] = 255;
        let s = sharpen(&raster(3, 3, &px));
        // centre: 5*255 = 1275 -> 255; edge neighbours: -255 -> 0.
        assert_eq!(s.get(1, 1), 255);
        for (x, y) in [(1, 0), (0, 1), (2, 1), (1, 2)] {
            assert_eq!(s.get(x, y), 0);
        }
    }

    #[test]
    fn identity_config_is_identity() {
        let px: Vec<u8> = (0..30).map(|i| (i * 8) as u8).collect();
        let r = raster(6, 5, &px);
        let out = preprocess(&r, &PreprocessConfig::identity()).unwrap();
        assert_eq!(out.value, r);
        assert!(out.warnings.is_empty());
    }

    #[test]
    fn invalid_kernel_rejected() {
        let r = PageRaster::filled(3, 3, 0).unwrap();
        let cfg = PreprocessConfig {
            kernel: 2,
            ..PreprocessConfig::default()
        };
        assert!(matches!(
            preprocess(&r, &cfg),
            Err(ImagingError::InvalidConfig(_))
        ));
    }
}
