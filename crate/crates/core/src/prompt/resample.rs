//! Bilinear resampling with half-pixel centers (`align_corners = false`).

use crate::data::{BinaryMask, CoordSpace, ProbabilityGrid, EMBED_SIZE};
use crate::error::{Error, Result};

pub const DECODER_GRID: usize = 256;

#[derive(Debug, Clone, Copy)]
struct Tap {
    lo: usize,
    hi: usize,
    frac: f64,
}

/// Source taps for each output index along one axis.
fn taps(input: usize, output: usize) -> Vec<Tap> {
    let ratio = input as f64 / output as f64;
    (0..output)
        .map(|i| {
            let src = ((i as f64 + 0.5) * ratio - 0.5).max(0.0);
            let lo = (src.floor() as usize).min(input - 1);
            let hi = (lo + 1).min(input - 1);
            Tap {
                lo,
                hi,
                frac: src - lo as f64,
            }
        })
        .collect()
}

/// Resizes the top-left `crop_h x crop_w` window of a row-major grid of
/// width `stride` to `out_h x out_w`.
pub(crate) fn bilinear_crop_resize(
    values: &[f64],
    stride: usize,
    crop_h: usize,
    crop_w: usize,
    out_h: usize,
    out_w: usize,
) -> Vec<f64> {
    let ty = taps(crop_h, out_h);
    let tx = taps(crop_w, out_w);
    let mut out = Vec::with_capacity(out_h * out_w);
    for t in &ty {
        let r0 = &values[t.lo * stride..t.lo * stride + crop_w];
        let r1 = &values[t.hi * stride..t.hi * stride + crop_w];
        for s in &tx {
            let top = r0[s.lo] + (r0[s.hi] - r0[s.lo]) * s.frac;
            let bottom = r1[s.lo] + (r1[s.hi] - r1[s.lo]) * s.frac;
            out.push(top + (bottom - top) * t.frac);
        }
    }
    out
}

pub fn resize_probabilities(
    probs: &ProbabilityGrid,
    height: usize,
    width: usize,
    space: CoordSpace,
) -> Result<ProbabilityGrid> {
    if height == 0 || width == 0 {
        return Err(Error::dims("resize target", "positive size", format!("{height}x{width}")));
    }
    let values = bilinear_crop_resize(
        probs.values(),
        probs.width(),
        probs.height(),
        probs.width(),
        height,
        width,
    );
    ProbabilityGrid::new(height, width, values.into_iter().map(|v| v.clamp(0.0, 1.0)).collect(), space)
}

/// 64x64 coarse probabilities to a 256x256 mask: bilinear, then `p > 0.5`.
pub fn upsample_mask(probs: &ProbabilityGrid) -> Result<BinaryMask> {
    if probs.height() != EMBED_SIZE || probs.width() != EMBED_SIZE {
        return Err(Error::dims(
            "coarse probabilities",
            "64x64",
            format!("{}x{}", probs.height(), probs.width()),
        ));
    }
    let up = resize_probabilities(probs, DECODER_GRID, DECODER_GRID, CoordSpace::Grid256)?;
    Ok(crate::classifier::threshold_mask(&up))
}

#[cfg(test)]
mod tests {
    use super::*;

    /// Direct per-output-pixel bilinear evaluation.
    fn oracle(grid: &[f64], n: usize, out: usize, x: usize, y: usize) -> f64 {
        let scale = n as f64 / out as f64;
        let sample = |i: usize| -> (usize, usize, f64) {
            let s = ((i as f64 + 0.5) * scale - 0.5).max(0.0);
            let a = s.floor() as usize;
            let b = if a + 1 < n { a + 1 } else { n - 1 };
            (a.min(n - 1), b, s - a as f64)
        };
        let (x0, x1, fx) = sample(x);
        let (y0, y1, fy) = sample(y);
        let g = |xx: usize, yy: usize| grid[yy * n + xx];
        (1.0 - fy) * ((1.0 - fx) * g(x0, y0) + fx * g(x1, y0)) + fy * ((1.0 - fx) * g(x0, y1) + fx * g(x1, y1))
    }

    #[test]
    fn uniform_grids() {
        let one = ProbabilityGrid::uniform(64, 64, 1.0, CoordSpace::Grid64).unwrap();
        let m = upsample_mask(&one).unwrap();
        assert_eq!((m.width(), m.height(), m.count()), (256, 256, 256 * 256));
        assert_eq!(m.space(), CoordSpace::Grid256);
        let zero = ProbabilityGrid::uniform(64, 64, 0.0, CoordSpace::Grid64).unwrap();
        assert!(upsample_mask(&zero).unwrap().is_empty());
    }

    #[test]
    fn single_cell_blob_matches_oracle() {
        let (cx, cy) = (20usize, 33usize);
        let g = ProbabilityGrid::from_fn(64, 64, CoordSpace::Grid64, |x, y| {
            if (x, y) == (cx, cy) {
                1.0
            } else {
                0.0
            }
        })
        .unwrap();
        let m = upsample_mask(&g).unwrap();
        for y in 0..256 {
            for x in 0..256 {
                assert_eq!(m.get(x, y), oracle(g.values(), 64, 256, x, y) > 0.5, "({x},{y})");
            }
        }
        // The blob is the cell's 4x4 block less its corners: corner samples
        // sit 0.375 cells off-center on both axes (weight 0.625^2 < 0.5).
        assert_eq!(m.count(), 12);
        assert!(m.foreground().all(|(x, y)| x / 4 == cx && y / 4 == cy));
        assert!(!m.get(4 * cx, 4 * cy));
        assert!(m.get(4 * cx + 1, 4 * cy));
    }

    #[test]
    fn random_grid_matches_oracle() {
        use rand::{Rng, SeedableRng};
        let mut rng = rand_xoshiro::SplitMix64::seed_from_u64(4);
        let g = ProbabilityGrid::from_fn(64, 64, CoordSpace::Grid64, |_, _| rng.gen_range(0.0..1.0)).unwrap();
        let up = resize_probabilities(&g, 256, 256, CoordSpace::Grid256).unwrap();
        for y in 0..256 {
            for x in 0..256 {
                assert!((up.get(x, y) - oracle(g.values(), 64, 256, x, y)).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn rejects_wrong_size() {
        let g = ProbabilityGrid::uniform(32, 64, 1.0, CoordSpace::Grid64).unwrap();
        assert!(upsample_mask(&g).is_err());
    }
}
