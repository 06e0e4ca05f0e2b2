//! Runs only with `--features onnx`. The stub model (see
//! tests/data/make_stub_decoder.py) returns 10 * embedding channel 0
//! upsampled 4x, minus 100 when the prompt has no foreground point.

#![cfg(feature = "onnx")]

use std::path::PathBuf;

use selfprompt::data::{BinaryMask, CoordSpace, EmbeddingGrid, PointLabel, PromptBox, PromptMode, PromptPoint, PromptSet};
use selfprompt::decoder::{decode, DecodeRequest, DecoderBackend, GeometryInfo, OnnxDecoder};

fn stub() -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("tests/data/stub_decoder.onnx")
}

fn prompts(mode: PromptMode) -> PromptSet {
    let point = mode.uses_point().then_some(PromptPoint {
        x: 300.0,
        y: 400.0,
        label: PointLabel::Foreground,
    });
    let bbox = mode.uses_box().then_some(PromptBox {
        x_min: 100.0,
        y_min: 100.0,
        x_max: 700.0,
        y_max: 900.0,
    });
    PromptSet::new(point, bbox, mode, CoordSpace::Padded1024).unwrap()
}

#[test]
fn tensors_are_wired_by_name() {
    let decoder = OnnxDecoder::load(stub()).unwrap();
    let emb = EmbeddingGrid::from_fn(|c, _, x| if c == 0 { if x < 32 { 1.0 } else { -1.0 } } else { 0.0 }).unwrap();
    let geometry = GeometryInfo::new(300, 400).unwrap();
    let refined = BinaryMask::empty(256, 256, CoordSpace::Grid256);
    for (mode, left) in [(PromptMode::Point, true), (PromptMode::Box, false), (PromptMode::PointAndBox, true)] {
        let p = prompts(mode);
        let req = DecodeRequest {
            embedding: &emb,
            prompts: &p,
            geometry: &geometry,
            coarse_refined: &refined,
        };
        let out = decode(&decoder, &req).unwrap();
        assert_eq!((out.height(), out.width(), out.space()), (256, 256, CoordSpace::Grid256));
        let expected_left = if left { 1.0 / (1.0 + (-10.0f64).exp()) } else { 0.0 };
        assert!((out.get(10, 50) - expected_left).abs() < 1e-6, "{mode}: {}", out.get(10, 50));
        assert!(out.get(200, 50) < 1e-4, "{mode}");
    }
}

#[test]
fn backend_spec_opens_the_model_and_missing_files_fail() {
    let spec = format!("model:{}", stub().display());
    assert!(spec.parse::<DecoderBackend>().unwrap().open().is_ok());
    let err = OnnxDecoder::load("/nonexistent/decoder.onnx").err().unwrap();
    assert!(err.to_string().contains("/nonexistent/decoder.onnx"));
}
