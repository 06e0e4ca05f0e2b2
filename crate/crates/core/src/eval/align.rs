//! Ground truth to the 64x64 embedding lattice by exact area averaging.
//!
//! Cell `(i, j)` of the lattice covers padded-1024 pixels
//! `[16j, 16j+16) x [16i, 16i+16)`. Its foreground fraction is the area of
//! ground-truth foreground inside that square, with the padding counted as
//! background; cells with fraction `>= 0.5` are foreground.

use crate::data::{BinaryMask, CoordSpace, EMBED_SIZE};
use crate::decoder::{GeometryInfo, PADDED_SIZE};
use crate::error::{Error, Result};

/// `(pixel, overlap length)` lists for each lattice cell along one axis.
fn axis_overlaps(original: usize, scale: f64) -> Vec<Vec<(usize, f64)>> {
    let cell = (PADDED_SIZE / EMBED_SIZE) as f64 / scale;
    (0..EMBED_SIZE)
        .map(|j| {
            let (lo, hi) = (j as f64 * cell, (j + 1) as f64 * cell);
            let first = lo.floor() as usize;
            let last = (hi.ceil() as usize).min(original);
            (first..last)
                .filter_map(|p| {
                    let len = hi.min(p as f64 + 1.0) - lo.max(p as f64);
                    (len > 0.0).then_some((p, len))
                })
                .collect()
        })
        .collect()
}

/// Per-cell foreground fraction, row-major 64x64.
pub fn gt_coverage_grid64(gt: &BinaryMask, geometry: &GeometryInfo) -> Result<Vec<f64>> {
    if gt.space() != CoordSpace::OriginalImage {
        return Err(Error::SpaceMismatch {
            expected: CoordSpace::OriginalImage.to_string(),
            found: gt.space().to_string(),
        });
    }
    gt.expect_shape(geometry.original_height, geometry.original_width, "ground truth vs geometry")?;
    let (sx, sy) = geometry.axis_scales();
    let xs = axis_overlaps(gt.width(), sx);
    let ys = axis_overlaps(gt.height(), sy);
    let cell_area = ((PADDED_SIZE / EMBED_SIZE) as f64).powi(2) / (sx * sy);
    let mut out = Vec::with_capacity(EMBED_SIZE * EMBED_SIZE);
    for ycell in &ys {
        for xcell in &xs {
            let mut area = 0.0;
            for &(py, ly) in ycell {
                let row: f64 = xcell
                    .iter()
                    .filter(|&&(px, _)| gt.get(px, py))
                    .map(|&(_, lx)| lx)
                    .sum();
                area += row * ly;
            }
            out.push(area / cell_area);
        }
    }
    Ok(out)
}

pub fn align_gt_to_grid64(gt: &BinaryMask, geometry: &GeometryInfo) -> Result<BinaryMask> {
    let cover = gt_coverage_grid64(gt, geometry)?;
    let bits = cover.into_iter().map(|c| c >= 0.5 - 1e-12).collect();
    BinaryMask::from_bits(EMBED_SIZE, EMBED_SIZE, bits, CoordSpace::Grid64)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn full_square_image() {
        let g = GeometryInfo::new(200, 200).unwrap();
        let gt = BinaryMask::full(200, 200, CoordSpace::OriginalImage);
        assert_eq!(align_gt_to_grid64(&gt, &g).unwrap().count(), 4096);
    }

    #[test]
    fn full_landscape_image_leaves_padding_empty() {
        let g = GeometryInfo::new(300, 400).unwrap();
        let gt = BinaryMask::full(300, 400, CoordSpace::OriginalImage);
        let m = align_gt_to_grid64(&gt, &g).unwrap();
        // 768 padded rows = 48 full cells.
        assert!(m.foreground().all(|(_, y)| y < 48));
        assert_eq!(m.count(), 48 * 64);
    }

    #[test]
    fn empty_gt() {
        let g = GeometryInfo::new(99, 31).unwrap();
        let gt = BinaryMask::empty(99, 31, CoordSpace::OriginalImage);
        assert!(align_gt_to_grid64(&gt, &g).unwrap().is_empty());
    }

    #[test]
    fn half_plane_matches_coverage_integral() {
        // Foreground columns [0, a) of a 300x400 image: every cell's fraction
        // is the overlap of its x-interval with [0, a) over the cell width.
        let (h, w, a) = (300usize, 400usize, 137usize);
        let g = GeometryInfo::new(h, w).unwrap();
        let gt = BinaryMask::from_fn(h, w, CoordSpace::OriginalImage, |x, _| x < a);
        let cover = gt_coverage_grid64(&gt, &g).unwrap();
        let cell = 16.0 / 2.56;
        for i in 0..64 {
            for j in 0..64 {
                let (lo, hi) = (j as f64 * cell, (j + 1) as f64 * cell);
                let fx = ((hi.min(a as f64) - lo).max(0.0)) / cell;
                let fy = if i < 48 { 1.0 } else { 0.0 };
                assert!((cover[i * 64 + j] - fx * fy).abs() < 1e-9, "cell ({i},{j})");
            }
        }
    }

    #[test]
    fn rejects_mismatched_geometry() {
        let g = GeometryInfo::new(10, 10).unwrap();
        let gt = BinaryMask::empty(10, 11, CoordSpace::OriginalImage);
        assert!(align_gt_to_grid64(&gt, &g).is_err());
        let gt = BinaryMask::empty(10, 10, CoordSpace::Grid256);
        assert!(align_gt_to_grid64(&gt, &g).is_err());
    }
}
