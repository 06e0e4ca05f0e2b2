use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::metrics::{dice, iou};
use super::protocol::{kfold_split, sample_shots, ShotCount};
use super::align::align_gt_to_grid64;
use crate::classifier::{fit_classifier, predict_probability_grid, FewShotTrainSet, PixelClassifier, TrainConfig};
use crate::data::{read_embedding, read_mask, BinaryMask, CoordSpace, EmbeddingGrid, ManifestEntry, PromptMode, PromptSet, SampleManifest};
use crate::decoder::{decode, postprocess_to_original, DecodeRequest, DecoderBackend, GeometryInfo, MaskDecoder};
use crate::error::{Error, Result};
use crate::prompt::{build_prompt_set, MorphConfig, PerturbConfig, PromptOutcome};

#[derive(Debug, Clone)]
pub struct ExperimentConfig {
    /// Label written into the report's `dataset` column.
    pub dataset: String,
    pub folds: usize,
    pub shot_counts: Vec<ShotCount>,
    pub modes: Vec<PromptMode>,
    pub seed: u64,
    pub morph: MorphConfig,
    pub perturb: PerturbConfig,
    pub train: TrainConfig,
    pub backend: DecoderBackend,
    /// Per-sample inference threads; results are always aggregated in
    /// manifest order.
    pub workers: usize,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        Self {
            dataset: "dataset".into(),
            folds: 5,
            shot_counts: vec![
                ShotCount::Count(10),
                ShotCount::Count(20),
                ShotCount::Count(40),
                ShotCount::Full,
            ],
            modes: PromptMode::ALL.to_vec(),
            seed: 0,
            morph: MorphConfig::default(),
            perturb: PerturbConfig::default(),
            train: TrainConfig::default(),
            backend: DecoderBackend::Mock,
            workers: 1,
        }
    }
}

impl ExperimentConfig {
    pub fn validate(&self) -> Result<()> {
        if self.folds < 2 {
            return Err(Error::InvalidConfig("folds must be at least 2".into()));
        }
        if self.shot_counts.is_empty() || self.shot_counts.contains(&ShotCount::Count(0)) {
            return Err(Error::InvalidConfig("shot counts must be positive".into()));
        }
        if self.modes.is_empty() {
            return Err(Error::InvalidConfig("at least one prompt mode is required".into()));
        }
        if self.workers == 0 {
            return Err(Error::InvalidConfig("workers must be at least 1".into()));
        }
        self.train.validate()
    }

    /// `key=value` pairs echoed into report headers.
    pub fn parameters(&self) -> Vec<(String, String)> {
        let join = |v: Vec<String>| v.join(",");
        vec![
            ("dataset".into(), self.dataset.clone()),
            ("folds".into(), self.folds.to_string()),
            ("shots".into(), join(self.shot_counts.iter().map(|s| s.to_string()).collect())),
            ("modes".into(), join(self.modes.iter().map(|m| m.to_string()).collect())),
            ("seed".into(), self.seed.to_string()),
            ("backend".into(), self.backend.to_string()),
            ("kernel".into(), self.morph.kernel.size().to_string()),
            ("erosion_iterations".into(), self.morph.erosion_iterations.to_string()),
            ("dilation_iterations".into(), self.morph.dilation_iterations.to_string()),
            ("perturb_enabled".into(), self.perturb.enabled.to_string()),
            ("perturb_max_pixels".into(), self.perturb.max_pixels.to_string()),
            ("perturb_seed".into(), self.perturb.seed.to_string()),
            ("max_iterations".into(), self.train.max_iterations.to_string()),
            ("convergence_tolerance".into(), format!("{:e}", self.train.convergence_tolerance)),
            ("regularization_weight".into(), self.train.regularization_weight.to_string()),
        ]
    }
}

/// One sample's inputs, loaded from disk.
#[derive(Debug, Clone)]
pub struct LoadedSample {
    pub id: String,
    pub embedding: EmbeddingGrid,
    pub gt: BinaryMask,
    pub geometry: GeometryInfo,
}

pub fn load_sample(manifest: &SampleManifest, entry: &ManifestEntry) -> Result<LoadedSample> {
    let load = || -> Result<LoadedSample> {
        let geometry = entry.geometry()?;
        let embedding = read_embedding(manifest.embedding_path(entry))?;
        let gt = read_mask(manifest.mask_path(entry), CoordSpace::OriginalImage)?;
        gt.expect_shape(geometry.original_height, geometry.original_width, "ground-truth mask vs manifest")?;
        Ok(LoadedSample {
            id: entry.id.clone(),
            embedding,
            gt,
            geometry,
        })
    };
    load().map_err(|e| e.for_sample(&entry.id))
}

/// Loads the listed samples and aligns their masks to the 64x64 lattice.
pub fn load_train_set(manifest: &SampleManifest, ids: &[String]) -> Result<FewShotTrainSet> {
    let mut samples = Vec::with_capacity(ids.len());
    for id in ids {
        let entry = manifest
            .entry(id)
            .ok_or_else(|| Error::InvalidConfig(format!("id {id:?} not in manifest")))?;
        let s = load_sample(manifest, entry)?;
        let label = align_gt_to_grid64(&s.gt, &s.geometry).map_err(|e| e.for_sample(id))?;
        samples.push((s.embedding, label));
    }
    FewShotTrainSet::new(samples)
}

/// Stable per-sample seed: FNV-1a of the id mixed into `base`.
pub fn sample_seed(base: u64, id: &str) -> u64 {
    let mut h: u64 = 0xcbf2_9ce4_8422_2325;
    for b in id.bytes() {
        h ^= b as u64;
        h = h.wrapping_mul(0x0100_0000_01b3);
    }
    base ^ h
}

/// Output of the full pipeline for one image and one prompt mode.
#[derive(Debug, Clone)]
pub struct Prediction {
    pub mode: PromptMode,
    /// `None` for linear-only mode and for unpromptable samples.
    pub prompts: Option<PromptSet>,
    pub mask: BinaryMask,
    pub unpromptable: bool,
}

pub fn predict_sample(
    classifier: &PixelClassifier,
    decoder: &dyn MaskDecoder,
    sample: &LoadedSample,
    mode: PromptMode,
    morph: &MorphConfig,
    perturb: &PerturbConfig,
) -> Result<Prediction> {
    let run = || -> Result<Prediction> {
        let coarse = predict_probability_grid(classifier, &sample.embedding)?;
        if mode == PromptMode::LinearOnly {
            return Ok(Prediction {
                mode,
                prompts: None,
                mask: postprocess_to_original(&coarse, &sample.geometry)?,
                unpromptable: false,
            });
        }
        let perturb = PerturbConfig {
            seed: sample_seed(perturb.seed, &sample.id),
            ..*perturb
        };
        match build_prompt_set(&coarse, mode, morph, &perturb)? {
            PromptOutcome::Unpromptable { .. } => Ok(Prediction {
                mode,
                prompts: None,
                mask: BinaryMask::empty(
                    sample.geometry.original_height,
                    sample.geometry.original_width,
                    CoordSpace::OriginalImage,
                ),
                unpromptable: true,
            }),
            PromptOutcome::Prompted { prompts, refined } => {
                let request = DecodeRequest {
                    embedding: &sample.embedding,
                    prompts: &prompts,
                    geometry: &sample.geometry,
                    coarse_refined: &refined,
                };
                let padded = decode(decoder, &request)?;
                Ok(Prediction {
                    mode,
                    prompts: Some(prompts),
                    mask: postprocess_to_original(&padded, &sample.geometry)?,
                    unpromptable: false,
                })
            }
        }
    };
    run().map_err(|e| e.for_sample(&sample.id))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SampleScore {
    pub id: String,
    pub dice: f64,
    pub iou: f64,
}

/// Scores of one `(fold, shots, mode)` cell.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CellReport {
    pub fold: usize,
    pub shots: ShotCount,
    pub mode: PromptMode,
    pub samples: Vec<SampleScore>,
}

fn mean(values: impl Iterator<Item = f64>) -> f64 {
    let (sum, n) = values.fold((0.0, 0usize), |(s, n), v| (s + v, n + 1));
    if n == 0 {
        0.0
    } else {
        sum / n as f64
    }
}

impl CellReport {
    pub fn mean_dice_pct(&self) -> f64 {
        100.0 * mean(self.samples.iter().map(|s| s.dice))
    }

    pub fn mean_iou_pct(&self) -> f64 {
        100.0 * mean(self.samples.iter().map(|s| s.iou))
    }
}

/// Pooled over every fold's held-out samples.
#[derive(Debug, Clone, PartialEq)]
pub struct AggregateRow {
    pub shots: ShotCount,
    pub mode: PromptMode,
    pub mean_dice_pct: f64,
    pub mean_iou_pct: f64,
    pub n: usize,
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct MetricReport {
    pub dataset: String,
    pub parameters: Vec<(String, String)>,
    pub cells: Vec<CellReport>,
}

impl MetricReport {
    pub fn aggregate(&self) -> Vec<AggregateRow> {
        let mut keys: Vec<(ShotCount, PromptMode)> = Vec::new();
        for c in &self.cells {
            if !keys.contains(&(c.shots, c.mode)) {
                keys.push((c.shots, c.mode));
            }
        }
        keys.into_iter()
            .map(|(shots, mode)| {
                let scores: Vec<&SampleScore> = self
                    .cells
                    .iter()
                    .filter(|c| c.shots == shots && c.mode == mode)
                    .flat_map(|c| &c.samples)
                    .collect();
                AggregateRow {
                    shots,
                    mode,
                    mean_dice_pct: 100.0 * mean(scores.iter().map(|s| s.dice)),
                    mean_iou_pct: 100.0 * mean(scores.iter().map(|s| s.iou)),
                    n: scores.len(),
                }
            })
            .collect()
    }
}

pub fn run_experiment(config: &ExperimentConfig, manifest: &SampleManifest) -> Result<MetricReport> {
    let decoder = config.backend.open()?;
    run_experiment_with(config, manifest, &*decoder)
}

/// As [`run_experiment`], with an already-open decoder.
pub fn run_experiment_with(
    config: &ExperimentConfig,
    manifest: &SampleManifest,
    decoder: &dyn MaskDecoder,
) -> Result<MetricReport> {
    config.validate()?;
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(config.workers)
        .build()
        .map_err(|e| Error::InvalidConfig(format!("thread pool: {e}")))?;
    pool.install(|| run_inner(config, manifest, decoder))
}

fn run_inner(config: &ExperimentConfig, manifest: &SampleManifest, decoder: &dyn MaskDecoder) -> Result<MetricReport> {
    let folds = kfold_split(manifest, config.folds, config.seed)?;
    let mut cells = Vec::new();
    for fold in &folds {
        for &shots in &config.shot_counts {
            let ids = sample_shots(&fold.train_pool, shots, config.seed ^ fold.index as u64)?;
            let train_set = load_train_set(manifest, &ids)?;
            let classifier = fit_classifier(&train_set, &config.train)?;
            drop(train_set);

            let per_sample: Vec<Vec<SampleScore>> = fold
                .eval
                .par_iter()
                .map(|id| {
                    let entry = manifest.entry(id).expect("fold ids come from the manifest");
                    let sample = load_sample(manifest, entry)?;
                    config
                        .modes
                        .iter()
                        .map(|&mode| {
                            let pred = predict_sample(&classifier, decoder, &sample, mode, &config.morph, &config.perturb)?;
                            let score = SampleScore {
                                id: id.clone(),
                                dice: dice(&pred.mask, &sample.gt)?,
                                iou: iou(&pred.mask, &sample.gt)?,
                            };
                            Ok(score)
                        })
                        .collect::<Result<Vec<_>>>()
                })
                .collect::<Result<Vec<_>>>()?;

            for (m, &mode) in config.modes.iter().enumerate() {
                cells.push(CellReport {
                    fold: fold.index,
                    shots,
                    mode,
                    samples: per_sample.iter().map(|s| s[m].clone()).collect(),
                });
            }
        }
    }
    Ok(MetricReport {
        dataset: config.dataset.clone(),
        parameters: config.parameters(),
        cells,
    })
}
