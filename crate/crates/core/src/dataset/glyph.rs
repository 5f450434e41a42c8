//! A fixed-cell bitmap "font" whose glyphs encode their own code point.
//!
//! Every character, including `'\n'`, occupies one cell of 6x8 bit squares
//! (each bit is `BIT` pixels wide at 72 dpi):
//!
//! ```text
//!   col 0      cols 1..=4            col 5
//!   marker     24 data bits (4x6)    gap        rows 0..=5
//!   marker     (empty)               gap        row 6 is the baseline,
//!   baseline   baseline              baseline   dark across the cell
//!   gap        gap                   gap        row 7
//! ```
//!
//! Data bits hold the code point in bits 0..=20 and an even-parity bit at 21.
//! A vertical rule left of the first cell joins every baseline, so one
//! connected dark component covers all the text and survives the contour
//! mask. Rows are read left to right until the first cell without a marker;
//! reading stops at the first row whose leading cell is empty.

use crate::imaging::PageRaster;

pub const BASE_DPI: f64 = 72.0;
pub const BIT: usize = 2;
const CELL_COLS: usize = 6;
const CELL_ROWS: usize = 8;
const CELL_W: usize = CELL_COLS * BIT;
const CELL_H: usize = CELL_ROWS * BIT;
const MARGIN: usize = 8;
const RULE_X: usize = MARGIN;
const FIRST_CELL_X: usize = MARGIN + 2 * BIT;
const DATA_BITS: usize = 24;
const PARITY_BIT: usize = 21;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct RenderLimits {
    pub columns: usize,
    pub max_width: usize,
    pub max_height: usize,
}

impl Default for RenderLimits {
    fn default() -> Self {
        Self {
            columns: 100,
            max_width: 4096,
            max_height: 8192,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
#[error("text needs a {width}x{height} raster, limit is {max_width}x{max_height}")]
pub struct TextTooLarge {
    pub width: usize,
    pub height: usize,
    pub max_width: usize,
    pub max_height: usize,
}

fn encode(c: char) -> u32 {
    let cp = c as u32;
    let parity = cp.count_ones() & 1;
    cp | (parity << PARITY_BIT)
}

fn decode(bits: u32) -> Option<char> {
    let cp = bits & ((1 << PARITY_BIT) - 1);
    let parity = (bits >> PARITY_BIT) & 1;
    if bits >> (PARITY_BIT + 1) != 0 || parity != cp.count_ones() & 1 {
        return None;
    }
    char::from_u32(cp)
}

/// Splits text into rows of cells, wrapping at `columns` and ending a row
/// after each newline.
fn layout(text: &str, columns: usize) -> Vec<Vec<char>> {
    let mut rows = Vec::new();
    let mut row = Vec::new();
    for c in text.chars() {
        row.push(c);
        if c == '\n' || row.len() == columns {
            rows.push(std::mem::take(&mut row));
        }
    }
    if !row.is_empty() {
        rows.push(row);
    }
    rows
}

/// Draws text onto a white raster at 72 dpi.
pub fn render_text(text: &str, limits: RenderLimits) -> Result<PageRaster, TextTooLarge> {
    let columns = limits.columns.max(1);
    let rows = layout(text, columns);
    let max_cells = rows.iter().map(Vec::len).max().unwrap_or(1).max(1);
    let width = FIRST_CELL_X + max_cells * CELL_W + MARGIN;
    let height = 2 * MARGIN + rows.len().max(1) * CELL_H;
    if width > limits.max_width || height > limits.max_height {
        return Err(TextTooLarge {
            width,
            height,
            max_width: limits.max_width,
            max_height: limits.max_height,
        });
    }

    let mut px = vec![255u8; width * height];
    let mut fill_bit = |bx: usize, by: usize| {
        for y in by..by + BIT {
            px[y * width + bx..y * width + bx + BIT].fill(0);
        }
    };
    for (r, row) in rows.iter().enumerate() {
        let top = MARGIN + r * CELL_H;
        let baseline_y = top + 6 * BIT;
        // Rule segment for this row, including the baseline row.
        for by in (top..=baseline_y).step_by(BIT) {
            fill_bit(RULE_X, by);
        }
        // Baseline from the rule to the end of the last cell.
        let end_x = FIRST_CELL_X + row.len() * CELL_W;
        for bx in (RULE_X..end_x).step_by(BIT) {
            fill_bit(bx, baseline_y);
        }
        for (c, &ch) in row.iter().enumerate() {
            let left = FIRST_CELL_X + c * CELL_W;
            for by in (top..baseline_y).step_by(BIT) {
                fill_bit(left, by);
            }
            let bits = encode(ch);
            for i in 0..DATA_BITS {
                if bits >> i & 1 == 1 {
                    let col = 1 + i % 4;
                    let row = i / 4;
                    fill_bit(left + col * BIT, top + row * BIT);
                }
            }
        }
        // The rule gap between rows belongs to the rule too.
        if r + 1 < rows.len() {
            fill_bit(RULE_X, baseline_y + BIT);
        }
    }
    Ok(PageRaster::new(width, height, px)
        .expect("dimensions computed above")
        .with_dpi(BASE_DPI))
}

/// Text recovered from a raster drawn by [`render_text`], possibly rescaled.
#[derive(Debug, Clone, PartialEq)]
pub struct CellReading {
    pub text: String,
    pub cells: usize,
    pub invalid_cells: usize,
}

/// Reads glyph cells back. The raster's dpi relative to 72 gives the scale;
/// a raster without dpi is read at scale 1.
pub fn read_cells(raster: &PageRaster) -> CellReading {
    let scale = raster.dpi().map_or(1.0, |d| d / BASE_DPI);
    let dark = |bx: usize, by: usize| -> Option<bool> {
        let x = ((bx as f64 + BIT as f64 / 2.0) * scale).floor() as usize;
        let y = ((by as f64 + BIT as f64 / 2.0) * scale).floor() as usize;
        (x < raster.width() && y < raster.height()).then(|| raster.get(x, y) < 128)
    };

    let mut text = String::new();
    let (mut cells, mut invalid) = (0, 0);
    for r in 0.. {
        let top = MARGIN + r * CELL_H;
        let mut c = 0;
        loop {
            let left = FIRST_CELL_X + c * CELL_W;
            if dark(left, top + 3 * BIT) != Some(true) {
                break;
            }
            let mut bits = 0u32;
            for i in 0..DATA_BITS {
                if dark(left + (1 + i % 4) * BIT, top + (i / 4) * BIT) == Some(true) {
                    bits |= 1 << i;
                }
            }
            cells += 1;
            let ch = decode(bits).unwrap_or_else(|| {
                invalid += 1;
                char::REPLACEMENT_CHARACTER
            });
            text.push(ch);
            c += 1;
            if ch == '\n' {
                break;
            }
        }
        if c == 0 {
            break;
        }
    }
    CellReading {
        text,
        cells,
        invalid_cells: invalid,
    }
}
