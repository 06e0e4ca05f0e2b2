//! 8-bit grayscale PNG mask files. Pixels `>= 128` are foreground.

use std::path::Path;

use image::{ColorType, DynamicImage, GrayImage, ImageFormat, ImageReader};

use super::{BinaryMask, CoordSpace};
use crate::error::{Error, Result};

const THRESHOLD: u8 = 128;

pub fn read_mask(path: impl AsRef<Path>, space: CoordSpace) -> Result<BinaryMask> {
    let path = path.as_ref();
    let image_err = |message: String| Error::Image {
        path: path.into(),
        message,
    };
    let mut reader = ImageReader::open(path).map_err(|e| Error::io(path, e))?;
    reader.set_format(ImageFormat::Png);
    let img = reader.decode().map_err(|e| image_err(e.to_string()))?;
    let gray = match img {
        DynamicImage::ImageLuma8(g) => g,
        other => {
            return Err(image_err(format!(
                "expected 8-bit single-channel mask, found {:?}",
                other.color()
            )))
        }
    };
    let (w, h) = gray.dimensions();
    let bits = gray.as_raw().iter().map(|&p| p >= THRESHOLD).collect();
    BinaryMask::from_bits(h as usize, w as usize, bits, space)
}

/// Writes foreground as 255 and background as 0.
pub fn write_mask(mask: &BinaryMask, path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    let raw = mask.bits().iter().map(|&b| if b { 255 } else { 0 }).collect();
    let img = GrayImage::from_raw(mask.width() as u32, mask.height() as u32, raw)
        .expect("buffer length matches mask geometry");
    image::save_buffer_with_format(
        path,
        img.as_raw(),
        img.width(),
        img.height(),
        ColorType::L8,
        ImageFormat::Png,
    )
    .map_err(|e| Error::Image {
        path: path.into(),
        message: e.to_string(),
    })
}
