//! Bridge to a promptable mask decoder and back to original-image space.

mod geometry;
mod mock;
#[cfg(feature = "onnx")]
mod onnx;

use std::fmt;
use std::path::PathBuf;
use std::str::FromStr;

use crate::data::{BinaryMask, CoordSpace, EmbeddingGrid, ProbabilityGrid, PromptSet};
use crate::error::{Error, Result};
use crate::prompt::{bilinear_crop_resize, DECODER_GRID};

pub use geometry::{GeometryInfo, PADDED_SIZE};
pub use mock::{label_components, mock_decode, MockDecoder};
#[cfg(feature = "onnx")]
pub use onnx::OnnxDecoder;

/// Everything a decoder may consult for one image.
#[derive(Debug, Clone, Copy)]
pub struct DecodeRequest<'a> {
    pub embedding: &'a EmbeddingGrid,
    pub prompts: &'a PromptSet,
    pub geometry: &'a GeometryInfo,
    /// Refined 256x256 coarse mask. Only the mock decoder reads it.
    pub coarse_refined: &'a BinaryMask,
}

/// A promptable decoder: prompts + embedding to a 256x256 padded-space
/// probability grid.
pub trait MaskDecoder: Send + Sync {
    fn decode(&self, request: &DecodeRequest<'_>) -> Result<ProbabilityGrid>;
}

impl<T: MaskDecoder + ?Sized> MaskDecoder for Box<T> {
    fn decode(&self, request: &DecodeRequest<'_>) -> Result<ProbabilityGrid> {
        (**self).decode(request)
    }
}

/// Which decoder to open.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum DecoderBackend {
    Mock,
    ExternalModel { model_path: PathBuf },
}

impl DecoderBackend {
    pub fn open(&self) -> Result<Box<dyn MaskDecoder>> {
        match self {
            DecoderBackend::Mock => Ok(Box::new(MockDecoder)),
            #[cfg(feature = "onnx")]
            DecoderBackend::ExternalModel { model_path } => Ok(Box::new(OnnxDecoder::load(model_path)?)),
            #[cfg(not(feature = "onnx"))]
            DecoderBackend::ExternalModel { model_path } => Err(Error::Decoder(format!(
                "cannot open {}: built without the `onnx` feature",
                model_path.display()
            ))),
        }
    }
}

impl fmt::Display for DecoderBackend {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            DecoderBackend::Mock => f.write_str("mock"),
            DecoderBackend::ExternalModel { model_path } => write!(f, "model:{}", model_path.display()),
        }
    }
}

impl FromStr for DecoderBackend {
    type Err = Error;

    /// `mock` or `model:<path>`.
    fn from_str(s: &str) -> Result<Self> {
        match s.split_once(':') {
            _ if s == "mock" => Ok(DecoderBackend::Mock),
            Some(("model", path)) if !path.is_empty() => Ok(DecoderBackend::ExternalModel {
                model_path: PathBuf::from(path),
            }),
            _ => Err(Error::InvalidConfig(format!(
                "unknown backend {s:?} (expected `mock` or `model:<path>`)"
            ))),
        }
    }
}

/// Runs `decoder` after checking the request is decodable, and checks the
/// shape of what comes back.
pub fn decode(decoder: &dyn MaskDecoder, request: &DecodeRequest<'_>) -> Result<ProbabilityGrid> {
    request.prompts.validate()?;
    crate::data::expect_space(request.prompts.space, CoordSpace::Padded1024)?;
    if !request.prompts.mode.uses_decoder() {
        return Err(Error::InvalidPrompt("linear-only prompts are not decoded".into()));
    }
    let out = decoder.decode(request)?;
    if out.height() != DECODER_GRID || out.width() != DECODER_GRID {
        return Err(Error::Decoder(format!(
            "expected 256x256 output, got {}x{}",
            out.height(),
            out.width()
        )));
    }
    Ok(out)
}

/// Crops the unpadded region of a square padded-space grid, resizes it
/// bilinearly to the original image size and thresholds at `p > 0.5`.
///
/// Works for the decoder's 256 grid and for the classifier's 64 grid.
pub fn postprocess_to_original(padded: &ProbabilityGrid, geometry: &GeometryInfo) -> Result<BinaryMask> {
    let grid = padded.width();
    if padded.height() != grid || !matches!(padded.space(), CoordSpace::Grid256 | CoordSpace::Grid64) {
        return Err(Error::dims(
            "padded grid",
            "square grid-64 or grid-256",
            format!("{}x{} {}", padded.height(), padded.width(), padded.space()),
        ));
    }
    let (rows, cols) = geometry.valid_cells(grid);
    let (h, w) = (geometry.original_height, geometry.original_width);
    let values = bilinear_crop_resize(padded.values(), grid, rows, cols, h, w);
    let bits = values.into_iter().map(|p| p > 0.5).collect();
    BinaryMask::from_bits(h, w, bits, CoordSpace::OriginalImage)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn backend_parsing() {
        assert_eq!("mock".parse::<DecoderBackend>().unwrap(), DecoderBackend::Mock);
        assert_eq!(
            "model:/tmp/d.onnx".parse::<DecoderBackend>().unwrap(),
            DecoderBackend::ExternalModel {
                model_path: "/tmp/d.onnx".into()
            }
        );
        assert!("model:".parse::<DecoderBackend>().is_err());
        assert!("onnx".parse::<DecoderBackend>().is_err());
        assert_eq!(DecoderBackend::Mock.to_string(), "mock");
    }

    #[test]
    fn square_image_is_pure_resize() {
        let g = GeometryInfo::new(512, 512).unwrap();
        let grid = ProbabilityGrid::from_fn(256, 256, CoordSpace::Grid256, |x, y| {
            if x < 100 && y < 60 {
                1.0
            } else {
                0.0
            }
        })
        .unwrap();
        let m = postprocess_to_original(&grid, &g).unwrap();
        assert_eq!((m.height(), m.width()), (512, 512));
        // 2x upscale of a 100x60 block with half-pixel centers keeps 200x120.
        assert_eq!(m.count(), 200 * 120);
    }

    #[test]
    fn uniform_one_fills_any_geometry() {
        let grid = ProbabilityGrid::uniform(256, 256, 1.0, CoordSpace::Grid256).unwrap();
        for (h, w) in [(300, 400), (17, 999), (640, 480)] {
            let m = postprocess_to_original(&grid, &GeometryInfo::new(h, w).unwrap()).unwrap();
            assert_eq!(m.count(), h * w);
            assert_eq!(m.space(), CoordSpace::OriginalImage);
        }
    }

    #[test]
    fn half_plane_boundary_lands_mid_image() {
        let g = GeometryInfo::new(300, 400).unwrap();
        let grid = ProbabilityGrid::from_fn(256, 256, CoordSpace::Grid256, |x, _| if x < 128 { 1.0 } else { 0.0 }).unwrap();
        let m = postprocess_to_original(&grid, &g).unwrap();
        // Scalar oracle: output column i samples crop column (i+0.5)*256/400-0.5;
        // the 0.5 contour sits at crop column 127.5.
        let boundary = (0..400).find(|&x| !m.get(x, 150)).unwrap();
        let oracle = (0..400)
            .find(|&i| (i as f64 + 0.5) * 256.0 / 400.0 - 0.5 >= 127.5)
            .unwrap();
        assert_eq!(boundary, oracle);
        assert!((boundary as i64 - 200).abs() <= 1);
        assert!((0..300).all(|y| m.get(boundary - 1, y) && !m.get(boundary, y)));
    }

    #[test]
    fn decode_validates() {
        let emb = EmbeddingGrid::zeros();
        let geom = GeometryInfo::new(10, 10).unwrap();
        let refined = BinaryMask::full(256, 256, CoordSpace::Grid256);
        let empty = PromptSet::empty(CoordSpace::Padded1024);
        let req = DecodeRequest {
            embedding: &emb,
            prompts: &empty,
            geometry: &geom,
            coarse_refined: &refined,
        };
        assert!(decode(&MockDecoder, &req).is_err());
    }
}
