//! Deterministic stand-in for a promptable decoder, used for hermetic tests.
//!
//! Output = the refined coarse mask, intersected with the box (inclusive,
//! in 256-grid cells) when one is given, then reduced to the 8-connected
//! component containing the point's cell when a point is given. If no
//! component contains that cell the nearest one is kept; distance ties go to
//! the component whose first pixel in raster order comes first.

use crate::data::{BinaryMask, CoordSpace, ProbabilityGrid, PromptSet};
use crate::error::{Error, Result};
use crate::prompt::{padded_to_grid256, DECODER_GRID};

use super::{DecodeRequest, MaskDecoder};

/// Component labels (1-based, raster order of first pixel; 0 = background).
pub fn label_components(mask: &BinaryMask) -> (Vec<u32>, u32) {
    let (w, h) = (mask.width(), mask.height());
    let mut labels = vec![0u32; w * h];
    let mut next = 0;
    let mut stack = Vec::new();
    for start in 0..w * h {
        if !mask.bits()[start] || labels[start] != 0 {
            continue;
        }
        next += 1;
        labels[start] = next;
        stack.push(start);
        while let Some(i) = stack.pop() {
            let (x, y) = ((i % w) as isize, (i / w) as isize);
            for dy in -1..=1 {
                for dx in -1..=1 {
                    let (nx, ny) = (x + dx, y + dy);
                    if nx < 0 || ny < 0 || nx >= w as isize || ny >= h as isize {
                        continue;
                    }
                    let j = ny as usize * w + nx as usize;
                    if mask.bits()[j] && labels[j] == 0 {
                        labels[j] = next;
                        stack.push(j);
                    }
                }
            }
        }
    }
    (labels, next)
}

pub fn mock_decode(prompts: &PromptSet, coarse_refined: &BinaryMask) -> Result<BinaryMask> {
    prompts.validate()?;
    coarse_refined.expect_shape(DECODER_GRID, DECODER_GRID, "mock decoder input")?;
    crate::data::expect_space(coarse_refined.space(), CoordSpace::Grid256)?;
    crate::data::expect_space(prompts.space, CoordSpace::Padded1024)?;

    let mut out = coarse_refined.clone();
    if let Some(b) = prompts.bbox {
        let (x0, x1) = (padded_to_grid256(b.x_min), padded_to_grid256(b.x_max));
        let (y0, y1) = (padded_to_grid256(b.y_min), padded_to_grid256(b.y_max));
        out = BinaryMask::from_fn(DECODER_GRID, DECODER_GRID, CoordSpace::Grid256, |x, y| {
            out.get(x, y) && (x0..=x1).contains(&x) && (y0..=y1).contains(&y)
        });
    }
    if let Some(p) = prompts.point {
        let (px, py) = (padded_to_grid256(p.x), padded_to_grid256(p.y));
        let (labels, count) = label_components(&out);
        if count == 0 {
            return Ok(out);
        }
        let keep = match labels[py * DECODER_GRID + px] {
            0 => {
                let mut best = vec![u64::MAX; count as usize + 1];
                for (i, &l) in labels.iter().enumerate() {
                    if l != 0 {
                        let dx = (i % DECODER_GRID) as i64 - px as i64;
                        let dy = (i / DECODER_GRID) as i64 - py as i64;
                        let d = (dx * dx + dy * dy) as u64;
                        best[l as usize] = best[l as usize].min(d);
                    }
                }
                // min_by_key returns the first minimum: the lowest label.
                (1..=count).min_by_key(|&l| best[l as usize]).unwrap()
            }
            l => l,
        };
        let bits = labels.iter().map(|&l| l == keep).collect();
        out = BinaryMask::from_bits(DECODER_GRID, DECODER_GRID, bits, CoordSpace::Grid256)?;
    }
    Ok(out)
}

#[derive(Debug, Default, Clone, Copy)]
pub struct MockDecoder;

impl MaskDecoder for MockDecoder {
    fn decode(&self, request: &DecodeRequest<'_>) -> Result<ProbabilityGrid> {
        if !request.prompts.mode.uses_decoder() {
            return Err(Error::InvalidPrompt("linear-only prompts cannot be decoded".into()));
        }
        let mask = mock_decode(request.prompts, request.coarse_refined)?;
        Ok(ProbabilityGrid::from_mask(&mask))
    }
}
