//! Inspection images: predicted mask fill, ground-truth contour, prompt
//! point and box, all drawn in original-image space.

use std::path::Path;

use image::{Rgb, RgbImage};

use crate::data::{BinaryMask, PromptSet};
use crate::decoder::GeometryInfo;
use crate::error::{Error, Result};

const BACKGROUND: Rgb<u8> = Rgb([24, 24, 24]);
const FILL: Rgb<u8> = Rgb([240, 200, 0]);
const CONTOUR: Rgb<u8> = Rgb([0, 230, 80]);
const POINT: Rgb<u8> = Rgb([230, 30, 30]);
const BOX: Rgb<u8> = Rgb([40, 120, 255]);

fn is_contour(gt: &BinaryMask, x: usize, y: usize) -> bool {
    if !gt.get(x, y) {
        return false;
    }
    let (w, h) = (gt.width(), gt.height());
    x == 0 || y == 0 || x + 1 == w || y + 1 == h || !gt.get(x - 1, y) || !gt.get(x + 1, y) || !gt.get(x, y - 1) || !gt.get(x, y + 1)
}

pub fn render_overlay(
    geometry: &GeometryInfo,
    pred: &BinaryMask,
    gt: &BinaryMask,
    prompts: Option<&PromptSet>,
) -> Result<RgbImage> {
    let (w, h) = (geometry.original_width, geometry.original_height);
    pred.expect_shape(h, w, "overlay prediction")?;
    gt.expect_shape(h, w, "overlay ground truth")?;
    let mut img = RgbImage::from_fn(w as u32, h as u32, |x, y| {
        let (x, y) = (x as usize, y as usize);
        if is_contour(gt, x, y) {
            CONTOUR
        } else if pred.get(x, y) {
            FILL
        } else {
            BACKGROUND
        }
    });
    let mut put = |x: i64, y: i64, c: Rgb<u8>| {
        if x >= 0 && y >= 0 && (x as usize) < w && (y as usize) < h {
            img.put_pixel(x as u32, y as u32, c);
        }
    };
    if let Some(p) = prompts {
        if let Some(b) = p.bbox {
            let (x0, y0) = geometry.to_original(b.x_min, b.y_min);
            let (x1, y1) = geometry.to_original(b.x_max, b.y_max);
            let (x0, y0, x1, y1) = (x0 as i64, y0 as i64, x1 as i64, y1 as i64);
            for x in x0..=x1 {
                put(x, y0, BOX);
                put(x, y1, BOX);
            }
            for y in y0..=y1 {
                put(x0, y, BOX);
                put(x1, y, BOX);
            }
        }
        if let Some(pt) = p.point {
            let (x, y) = geometry.to_original(pt.x, pt.y);
            let (x, y) = (x as i64, y as i64);
            let arm = (w.max(h) as i64 / 60).max(3);
            for d in -arm..=arm {
                put(x + d, y, POINT);
                put(x, y + d, POINT);
            }
        }
    }
    Ok(img)
}

pub fn emit_overlay(
    geometry: &GeometryInfo,
    pred: &BinaryMask,
    gt: &BinaryMask,
    prompts: Option<&PromptSet>,
    path: impl AsRef<Path>,
) -> Result<()> {
    let path = path.as_ref();
    render_overlay(geometry, pred, gt, prompts)?
        .save_with_format(path, image::ImageFormat::Png)
        .map_err(|e| Error::Image {
            path: path.into(),
            message: e.to_string(),
        })
}
