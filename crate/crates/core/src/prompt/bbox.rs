//! Tight bounding boxes with optional seeded outward jitter.
//!
//! Jitter draws come from SplitMix64 (`rand_xoshiro::SplitMix64`, seeded
//! with `seed_from_u64(seed)`) through `rand` 0.8's `gen_range(0..=max)`,
//! four draws in the order `x_min, y_min, x_max, y_max`.

use rand::{Rng, SeedableRng};
use rand_xoshiro::SplitMix64;
use serde::{Deserialize, Serialize};

use crate::data::BinaryMask;
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(default)]
pub struct PerturbConfig {
    pub max_pixels: usize,
    pub seed: u64,
    pub enabled: bool,
}

impl Default for PerturbConfig {
    fn default() -> Self {
        Self {
            max_pixels: 20,
            seed: 0,
            enabled: true,
        }
    }
}

/// Inclusive pixel box.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct PixelBox {
    pub x_min: usize,
    pub y_min: usize,
    pub x_max: usize,
    pub y_max: usize,
}

impl PixelBox {
    pub fn contains(&self, x: usize, y: usize) -> bool {
        (self.x_min..=self.x_max).contains(&x) && (self.y_min..=self.y_max).contains(&y)
    }

    pub fn contains_box(&self, other: &PixelBox) -> bool {
        self.x_min <= other.x_min
            && self.y_min <= other.y_min
            && self.x_max >= other.x_max
            && self.y_max >= other.y_max
    }
}

pub fn tight_bbox(mask: &BinaryMask) -> Result<PixelBox> {
    let mut b: Option<PixelBox> = None;
    for (x, y) in mask.foreground() {
        b = Some(match b {
            None => PixelBox {
                x_min: x,
                y_min: y,
                x_max: x,
                y_max: y,
            },
            Some(b) => PixelBox {
                x_min: b.x_min.min(x),
                y_min: b.y_min.min(y),
                x_max: b.x_max.max(x),
                y_max: b.y_max.max(y),
            },
        });
    }
    b.ok_or(Error::EmptyMask)
}

pub fn extract_bbox(mask: &BinaryMask, perturb: &PerturbConfig) -> Result<PixelBox> {
    let b = tight_bbox(mask)?;
    if !perturb.enabled || perturb.max_pixels == 0 {
        return Ok(b);
    }
    let mut rng = SplitMix64::seed_from_u64(perturb.seed);
    let mut draw = || rng.gen_range(0..=perturb.max_pixels);
    let (dx0, dy0, dx1, dy1) = (draw(), draw(), draw(), draw());
    Ok(PixelBox {
        x_min: b.x_min.saturating_sub(dx0),
        y_min: b.y_min.saturating_sub(dy0),
        x_max: (b.x_max + dx1).min(mask.width() - 1),
        y_max: (b.y_max + dy1).min(mask.height() - 1),
    })
}
