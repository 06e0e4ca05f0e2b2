//! External decoder backend: a promptable-decoder ONNX export run on CPU
//! with tract.
//!
//! Input names follow the standard export: `image_embeddings`,
//! `point_coords`, `point_labels`, `mask_input`, `has_mask_input`,
//! `orig_im_size`. The `low_res_masks` output (logits on the 256 grid) is
//! passed through a sigmoid.

use std::collections::HashMap;
use std::path::{Path, PathBuf};

use tract_onnx::prelude::*;
use tract_onnx::tract_core::internal::{bail, format_err};

use super::{DecodeRequest, MaskDecoder};
use crate::data::{CoordSpace, ProbabilityGrid, EMBED_CHANNELS, EMBED_SIZE};
use crate::error::{Error, Result};
use crate::prompt::DECODER_GRID;

const INPUTS: [&str; 6] = [
    "image_embeddings",
    "point_coords",
    "point_labels",
    "mask_input",
    "has_mask_input",
    "orig_im_size",
];

type Plan = TypedRunnableModel<TypedModel>;

/// One optimized plan per prompt length. Point-only and box-only prompts
/// use two entries, point plus box uses three.
pub struct OnnxDecoder {
    path: PathBuf,
    plans: HashMap<usize, Plan>,
    masks_output: usize,
    scores_output: Option<usize>,
}

fn decoder_err(path: &Path, e: impl std::fmt::Display) -> Error {
    Error::Decoder(format!("{}: {e}", path.display()))
}

fn build_plan(path: &Path, points: usize) -> TractResult<(Plan, usize, Option<usize>)> {
    let mut model = tract_onnx::onnx().model_for_path(path)?;
    let names: Vec<String> = model
        .input_outlets()?
        .iter()
        .map(|o| model.node(o.node).name.clone())
        .collect();
    for (i, name) in names.iter().enumerate() {
        let fact: InferenceFact = match name.as_str() {
            "image_embeddings" => f32::fact([1, EMBED_CHANNELS, EMBED_SIZE, EMBED_SIZE]).into(),
            "point_coords" => f32::fact([1, points, 2]).into(),
            "point_labels" => f32::fact([1, points]).into(),
            "mask_input" => f32::fact([1, 1, DECODER_GRID, DECODER_GRID]).into(),
            "has_mask_input" => f32::fact([1]).into(),
            "orig_im_size" => f32::fact([2]).into(),
            other => bail!("unexpected decoder input {other:?}"),
        };
        model.set_input_fact(i, fact)?;
    }
    for required in INPUTS {
        if !names.iter().any(|n| n == required) {
            bail!("decoder input {required:?} missing");
        }
    }
    let outputs: Vec<String> = model
        .output_outlets()?
        .iter()
        .map(|o| {
            model
                .outlet_label(*o)
                .map(str::to_owned)
                .unwrap_or_else(|| model.node(o.node).name.clone())
        })
        .collect();
    let masks = outputs
        .iter()
        .position(|n| n == "low_res_masks")
        .ok_or_else(|| format_err!("decoder output \"low_res_masks\" missing"))?;
    let scores = outputs.iter().position(|n| n == "iou_predictions");
    Ok((model.into_optimized()?.into_runnable()?, masks, scores))
}

impl OnnxDecoder {
    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        if !path.is_file() {
            return Err(Error::Decoder(format!("{}: model file not found", path.display())));
        }
        let mut plans = HashMap::new();
        let mut outputs = (0, None);
        for points in [2, 3] {
            let (plan, masks, scores) = build_plan(path, points).map_err(|e| decoder_err(path, e))?;
            plans.insert(points, plan);
            outputs = (masks, scores);
        }
        Ok(Self {
            path: path.to_owned(),
            plans,
            masks_output: outputs.0,
            scores_output: outputs.1,
        })
    }

    fn input_tensors(&self, request: &DecodeRequest<'_>) -> TractResult<HashMap<&'static str, Tensor>> {
        let mut coords = Vec::new();
        let mut labels = Vec::new();
        if let Some(p) = request.prompts.point {
            coords.extend([p.x as f32, p.y as f32]);
            labels.push(1.0f32);
        }
        match request.prompts.bbox {
            Some(b) => {
                coords.extend([b.x_min as f32, b.y_min as f32, b.x_max as f32, b.y_max as f32]);
                labels.extend([2.0f32, 3.0]);
            }
            None => {
                coords.extend([0.0f32, 0.0]);
                labels.push(-1.0);
            }
        }
        let n = labels.len();
        let g = request.geometry;
        let mut t = HashMap::new();
        t.insert(
            "image_embeddings",
            Tensor::from_shape(&[1, EMBED_CHANNELS, EMBED_SIZE, EMBED_SIZE], request.embedding.values())?,
        );
        t.insert("point_coords", Tensor::from_shape(&[1, n, 2], &coords)?);
        t.insert("point_labels", Tensor::from_shape(&[1, n], &labels)?);
        t.insert(
            "mask_input",
            Tensor::zero::<f32>(&[1, 1, DECODER_GRID, DECODER_GRID])?,
        );
        t.insert("has_mask_input", Tensor::from_shape(&[1], &[0.0f32])?);
        t.insert(
            "orig_im_size",
            Tensor::from_shape(&[2], &[g.original_height as f32, g.original_width as f32])?,
        );
        Ok(t)
    }

    fn run(&self, request: &DecodeRequest<'_>) -> TractResult<Vec<f64>> {
        let mut tensors = self.input_tensors(request)?;
        let n = tensors["point_labels"].shape()[1];
        let plan = self
            .plans
            .get(&n)
            .ok_or_else(|| format_err!("no plan for {n} prompt points"))?;
        let model = plan.model();
        let mut inputs = TVec::new();
        for o in model.input_outlets()? {
            let name = model.node(o.node).name.as_str();
            let key = INPUTS
                .iter()
                .find(|k| **k == name)
                .ok_or_else(|| format_err!("unexpected input {name:?}"))?;
            inputs.push(tensors.remove(key).expect("each input used once").into_tvalue());
        }
        let outputs = plan.run(inputs)?;
        let masks = outputs[self.masks_output].to_array_view::<f32>()?;
        let shape = masks.shape().to_vec();
        if shape.len() != 4 || shape[0] != 1 || shape[2] != DECODER_GRID || shape[3] != DECODER_GRID {
            bail!("low_res_masks has shape {shape:?}");
        }
        // Multi-mask exports: keep the mask with the best predicted IoU.
        let mut pick = 0;
        if shape[1] > 1 {
            if let Some(s) = self.scores_output {
                let scores = outputs[s].to_array_view::<f32>()?;
                let scores: Vec<f32> = scores.iter().copied().collect();
                for (i, v) in scores.iter().enumerate().take(shape[1]) {
                    if *v > scores[pick] {
                        pick = i;
                    }
                }
            }
        }
        let plane = DECODER_GRID * DECODER_GRID;
        let flat: Vec<f32> = masks.iter().copied().collect();
        Ok(flat[pick * plane..(pick + 1) * plane]
            .iter()
            .map(|&z| crate::classifier::sigmoid(z as f64))
            .collect())
    }
}

impl MaskDecoder for OnnxDecoder {
    fn decode(&self, request: &DecodeRequest<'_>) -> Result<ProbabilityGrid> {
        let probs = self.run(request).map_err(|e| decoder_err(&self.path, e))?;
        ProbabilityGrid::new(DECODER_GRID, DECODER_GRID, probs, CoordSpace::Grid256)
    }
}
