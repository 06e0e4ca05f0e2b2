//! Binary erosion and dilation with square structuring elements.
//!
//! Pixels outside the image count as background for both operations, so
//! erosion eats inward from the border and dilation is clipped at it. A
//! square element is separable: one horizontal and one vertical pass each.

use serde::{Deserialize, Serialize};

use crate::data::BinaryMask;
use crate::error::{Error, Result};

/// A full `size x size` square centered on the anchor pixel.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct SquareKernel {
    size: usize,
}

impl SquareKernel {
    pub fn new(size: usize) -> Result<Self> {
        if size == 0 || size % 2 == 0 {
            return Err(Error::InvalidConfig(format!("kernel size must be odd, got {size}")));
        }
        Ok(Self { size })
    }

    pub fn size(self) -> usize {
        self.size
    }

    fn radius(self) -> usize {
        self.size / 2
    }
}

impl Default for SquareKernel {
    fn default() -> Self {
        Self { size: 5 }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(default)]
pub struct MorphConfig {
    pub kernel: SquareKernel,
    pub erosion_iterations: usize,
    pub dilation_iterations: usize,
}

impl Default for MorphConfig {
    fn default() -> Self {
        Self {
            kernel: SquareKernel::default(),
            erosion_iterations: 3,
            dilation_iterations: 5,
        }
    }
}

/// One 1-D pass. Erosion keeps a pixel when every in-window pixel is set and
/// the window stays inside the line; dilation sets it when any is set.
fn pass(src: &[bool], dst: &mut [bool], len: usize, stride: usize, lines: usize, line_step: usize, r: usize, erode: bool) {
    for line in 0..lines {
        let base = line * line_step;
        // Running count of foreground pixels in the window around i.
        let at = |i: usize| src[base + i * stride] as usize;
        let mut count: usize = (0..=r.min(len - 1)).map(at).sum();
        for i in 0..len {
            let lo = i as isize - r as isize;
            let hi = i + r;
            dst[base + i * stride] = if erode {
                lo >= 0 && hi < len && count == 2 * r + 1
            } else {
                count > 0
            };
            if i + r + 1 < len {
                count += at(i + r + 1);
            }
            if lo >= 0 {
                count -= at(lo as usize);
            }
        }
    }
}

fn apply(mask: &BinaryMask, kernel: SquareKernel, iterations: usize, erode: bool) -> BinaryMask {
    let (h, w) = (mask.height(), mask.width());
    let r = kernel.radius();
    let mut cur = mask.bits().to_vec();
    if h == 0 || w == 0 || r == 0 {
        return mask.clone();
    }
    let mut tmp = vec![false; cur.len()];
    for _ in 0..iterations {
        pass(&cur, &mut tmp, w, 1, h, w, r, erode);
        pass(&tmp, &mut cur, h, w, w, 1, r, erode);
    }
    BinaryMask::from_bits(h, w, cur, mask.space()).expect("geometry preserved")
}

pub fn erode(mask: &BinaryMask, kernel: SquareKernel, iterations: usize) -> BinaryMask {
    apply(mask, kernel, iterations, true)
}

pub fn dilate(mask: &BinaryMask, kernel: SquareKernel, iterations: usize) -> BinaryMask {
    apply(mask, kernel, iterations, false)
}

/// Erode then dilate. If erosion wipes the mask out entirely, the
/// un-eroded mask is dilated instead.
pub fn refine_mask(mask: &BinaryMask, config: &MorphConfig) -> BinaryMask {
    let eroded = erode(mask, config.kernel, config.erosion_iterations);
    let base = if eroded.is_empty() { mask } else { &eroded };
    dilate(base, config.kernel, config.dilation_iterations)
}
