//! Domain types shared by every stage, plus their on-disk formats.

mod embedding;
mod manifest;
mod mask;
mod prompt;

use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub use embedding::{read_embedding, write_embedding, EmbeddingGrid, EMBED_CHANNELS, EMBED_SIZE};
pub use manifest::{load_manifest, ManifestEntry, SampleManifest};
pub use mask::{read_mask, write_mask};
pub use prompt::{PointLabel, PromptBox, PromptMode, PromptPoint, PromptSet};

/// Which coordinate frame a grid or prompt lives in.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum CoordSpace {
    /// Pixel grid of the source image, `H0 x W0`.
    OriginalImage,
    /// Longest side resized to 1024 and padded to a square.
    #[serde(rename = "padded-1024")]
    Padded1024,
    /// The encoder's 64x64 embedding lattice over the padded frame.
    #[serde(rename = "grid-64")]
    Grid64,
    /// The decoder's 256x256 low-resolution lattice over the padded frame.
    #[serde(rename = "grid-256")]
    Grid256,
}

impl fmt::Display for CoordSpace {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            CoordSpace::OriginalImage => "original-image",
            CoordSpace::Padded1024 => "padded-1024",
            CoordSpace::Grid64 => "grid-64",
            CoordSpace::Grid256 => "grid-256",
        })
    }
}

pub(crate) fn expect_space(found: CoordSpace, expected: CoordSpace) -> Result<()> {
    if found == expected {
        Ok(())
    } else {
        Err(Error::SpaceMismatch {
            expected: expected.to_string(),
            found: found.to_string(),
        })
    }
}

/// Row-major boolean label grid.
#[derive(Clone, PartialEq, Eq)]
pub struct BinaryMask {
    height: usize,
    width: usize,
    bits: Vec<bool>,
    space: CoordSpace,
}

impl BinaryMask {
    pub fn empty(height: usize, width: usize, space: CoordSpace) -> Self {
        Self {
            height,
            width,
            bits: vec![false; height * width],
            space,
        }
    }

    pub fn full(height: usize, width: usize, space: CoordSpace) -> Self {
        Self {
            height,
            width,
            bits: vec![true; height * width],
            space,
        }
    }

    pub fn from_bits(height: usize, width: usize, bits: Vec<bool>, space: CoordSpace) -> Result<Self> {
        if bits.len() != height * width {
            return Err(Error::dims(
                "mask bits",
                format!("{} ({height}x{width})", height * width),
                bits.len(),
            ));
        }
        Ok(Self {
            height,
            width,
            bits,
            space,
        })
    }

    /// Builds a mask by evaluating `f(x, y)` at every pixel.
    pub fn from_fn(
        height: usize,
        width: usize,
        space: CoordSpace,
        mut f: impl FnMut(usize, usize) -> bool,
    ) -> Self {
        let mut bits = Vec::with_capacity(height * width);
        for y in 0..height {
            for x in 0..width {
                bits.push(f(x, y));
            }
        }
        Self {
            height,
            width,
            bits,
            space,
        }
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn space(&self) -> CoordSpace {
        self.space
    }

    pub fn bits(&self) -> &[bool] {
        &self.bits
    }

    #[inline]
    pub fn get(&self, x: usize, y: usize) -> bool {
        self.bits[y * self.width + x]
    }

    #[inline]
    pub fn set(&mut self, x: usize, y: usize, value: bool) {
        self.bits[y * self.width + x] = value;
    }

    pub fn count(&self) -> usize {
        self.bits.iter().filter(|&&b| b).count()
    }

    pub fn is_empty(&self) -> bool {
        !self.bits.iter().any(|&b| b)
    }

    /// Foreground pixel coordinates `(x, y)` in row-major order.
    pub fn foreground(&self) -> impl Iterator<Item = (usize, usize)> + '_ {
        let w = self.width;
        self.bits
            .iter()
            .enumerate()
            .filter(|(_, &b)| b)
            .map(move |(i, _)| (i % w, i / w))
    }

    pub fn complement(&self) -> Self {
        Self {
            bits: self.bits.iter().map(|b| !b).collect(),
            ..self.clone()
        }
    }

    pub(crate) fn same_shape(&self, other: &BinaryMask, context: &str) -> Result<()> {
        if self.height != other.height || self.width != other.width {
            return Err(Error::dims(
                context,
                format!("{}x{}", self.height, self.width),
                format!("{}x{}", other.height, other.width),
            ));
        }
        expect_space(other.space, self.space)
    }

    pub(crate) fn expect_shape(&self, height: usize, width: usize, context: &str) -> Result<()> {
        if self.height != height || self.width != width {
            return Err(Error::dims(
                context,
                format!("{height}x{width}"),
                format!("{}x{}", self.height, self.width),
            ));
        }
        Ok(())
    }
}

impl fmt::Debug for BinaryMask {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("BinaryMask")
            .field("height", &self.height)
            .field("width", &self.width)
            .field("space", &self.space)
            .field("foreground", &self.count())
            .finish()
    }
}

/// Row-major grid of probabilities in `[0, 1]`.
#[derive(Debug, Clone, PartialEq)]
pub struct ProbabilityGrid {
    height: usize,
    width: usize,
    values: Vec<f64>,
    space: CoordSpace,
}

impl ProbabilityGrid {
    pub fn new(height: usize, width: usize, values: Vec<f64>, space: CoordSpace) -> Result<Self> {
        if values.len() != height * width {
            return Err(Error::dims(
                "probability grid",
                format!("{} ({height}x{width})", height * width),
                values.len(),
            ));
        }
        if let Some(index) = values.iter().position(|v| !(0.0..=1.0).contains(v)) {
            return Err(Error::NonFinite {
                context: format!("probability grid (value {} outside [0, 1])", values[index]),
                index,
            });
        }
        Ok(Self {
            height,
            width,
            values,
            space,
        })
    }

    pub fn uniform(height: usize, width: usize, value: f64, space: CoordSpace) -> Result<Self> {
        Self::new(height, width, vec![value; height * width], space)
    }

    /// Builds a grid from `f(x, y)`; values are clamped into `[0, 1]`.
    pub fn from_fn(
        height: usize,
        width: usize,
        space: CoordSpace,
        mut f: impl FnMut(usize, usize) -> f64,
    ) -> Result<Self> {
        let mut values = Vec::with_capacity(height * width);
        for y in 0..height {
            for x in 0..width {
                values.push(f(x, y).clamp(0.0, 1.0));
            }
        }
        Self::new(height, width, values, space)
    }

    /// A 0/1 grid carrying the same geometry as `mask`.
    pub fn from_mask(mask: &BinaryMask) -> Self {
        Self {
            height: mask.height,
            width: mask.width,
            values: mask.bits.iter().map(|&b| if b { 1.0 } else { 0.0 }).collect(),
            space: mask.space,
        }
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn space(&self) -> CoordSpace {
        self.space
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    #[inline]
    pub fn get(&self, x: usize, y: usize) -> f64 {
        self.values[y * self.width + x]
    }
}
