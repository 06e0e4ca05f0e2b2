//! From a coarse 64x64 probability grid to decoder prompts.
//!
//! upsample to 256x256 -> erode/dilate -> distance-transform point and
//! (optionally jittered) bounding box -> padded-1024 coordinates.

mod bbox;
mod distance;
mod morphology;
mod resample;

use crate::data::{BinaryMask, CoordSpace, PointLabel, ProbabilityGrid, PromptBox, PromptMode, PromptPoint, PromptSet};
use crate::error::Result;

pub use bbox::{extract_bbox, tight_bbox, PerturbConfig, PixelBox};
pub use distance::{distance_transform, extract_point, DistanceMap};
pub use morphology::{dilate, erode, refine_mask, MorphConfig, SquareKernel};
pub use resample::{resize_probabilities, upsample_mask, DECODER_GRID};
pub(crate) use resample::bilinear_crop_resize;

/// Padded-1024 pixels per decoder-grid cell.
const CELL: f64 = 4.0;

/// Center of a 256-grid cell in padded-1024 coordinates.
pub fn grid256_to_padded(v: usize) -> f64 {
    CELL * v as f64 + CELL / 2.0
}

/// The 256-grid cell whose center is nearest a padded-1024 coordinate.
pub fn padded_to_grid256(p: f64) -> usize {
    ((p - CELL / 2.0) / CELL).round().clamp(0.0, (DECODER_GRID - 1) as f64) as usize
}

/// Result of prompt generation for one image.
#[derive(Debug, Clone)]
pub enum PromptOutcome {
    Prompted { prompts: PromptSet, refined: BinaryMask },
    /// The refined mask is empty, so there is nothing to prompt with.
    Unpromptable { refined: BinaryMask },
}

impl PromptOutcome {
    pub fn refined(&self) -> &BinaryMask {
        match self {
            PromptOutcome::Prompted { refined, .. } | PromptOutcome::Unpromptable { refined } => refined,
        }
    }

    pub fn prompts(&self) -> Option<&PromptSet> {
        match self {
            PromptOutcome::Prompted { prompts, .. } => Some(prompts),
            PromptOutcome::Unpromptable { .. } => None,
        }
    }
}

pub fn build_prompt_set(
    coarse: &ProbabilityGrid,
    mode: PromptMode,
    morph: &MorphConfig,
    perturb: &PerturbConfig,
) -> Result<PromptOutcome> {
    let refined = refine_mask(&upsample_mask(coarse)?, morph);
    if mode == PromptMode::LinearOnly {
        return Ok(PromptOutcome::Prompted {
            prompts: PromptSet::empty(CoordSpace::Padded1024),
            refined,
        });
    }
    if refined.is_empty() {
        return Ok(PromptOutcome::Unpromptable { refined });
    }
    let point = if mode.uses_point() {
        let (x, y) = extract_point(&refined)?;
        Some(PromptPoint {
            x: grid256_to_padded(x),
            y: grid256_to_padded(y),
            label: PointLabel::Foreground,
        })
    } else {
        None
    };
    let bbox = if mode.uses_box() {
        let b = extract_bbox(&refined, perturb)?;
        Some(PromptBox {
            x_min: grid256_to_padded(b.x_min),
            y_min: grid256_to_padded(b.y_min),
            x_max: grid256_to_padded(b.x_max),
            y_max: grid256_to_padded(b.y_max),
        })
    } else {
        None
    };
    let prompts = PromptSet::new(point, bbox, mode, CoordSpace::Padded1024)?;
    Ok(PromptOutcome::Prompted { prompts, refined })
}
