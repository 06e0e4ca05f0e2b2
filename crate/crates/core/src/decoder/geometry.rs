use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub const PADDED_SIZE: usize = 1024;

/// How an original image maps into the padded 1024x1024 encoder frame:
/// longest side scaled to 1024, padding on the right and bottom.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GeometryInfo {
    pub original_height: usize,
    pub original_width: usize,
    pub scale: f64,
    pub resized_height: usize,
    pub resized_width: usize,
}

impl GeometryInfo {
    pub fn new(original_height: usize, original_width: usize) -> Result<Self> {
        if original_height == 0 || original_width == 0 {
            return Err(Error::dims(
                "image geometry",
                "positive size",
                format!("{original_height}x{original_width}"),
            ));
        }
        let scale = PADDED_SIZE as f64 / original_height.max(original_width) as f64;
        let resize = |v: usize| ((v as f64 * scale).round() as usize).clamp(1, PADDED_SIZE);
        Ok(Self {
            original_height,
            original_width,
            scale,
            resized_height: resize(original_height),
            resized_width: resize(original_width),
        })
    }

    /// Per-axis factors from original pixels to padded-1024 pixels.
    pub fn axis_scales(&self) -> (f64, f64) {
        (
            self.resized_width as f64 / self.original_width as f64,
            self.resized_height as f64 / self.original_height as f64,
        )
    }

    pub fn to_padded(&self, x: f64, y: f64) -> (f64, f64) {
        let (sx, sy) = self.axis_scales();
        (x * sx, y * sy)
    }

    pub fn to_original(&self, x: f64, y: f64) -> (f64, f64) {
        let (sx, sy) = self.axis_scales();
        (x / sx, y / sy)
    }

    /// Rows and columns of a `grid x grid` lattice over the padded frame that
    /// cover the unpadded image.
    pub fn valid_cells(&self, grid: usize) -> (usize, usize) {
        let cells = |r: usize| {
            ((grid as f64 * r as f64 / PADDED_SIZE as f64).round() as usize).clamp(1, grid)
        };
        (cells(self.resized_height), cells(self.resized_width))
    }
}
