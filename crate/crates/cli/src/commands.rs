use std::fs;
use std::path::{Path, PathBuf};

use anyhow::anyhow;
use serde_json::json;

use selfprompt::classifier::{fit_classifier, load_classifier, save_classifier, TrainConfig};
use selfprompt::data::{load_manifest, write_mask, PromptMode, PromptSet, SampleManifest};
use selfprompt::decoder::{DecoderBackend, GeometryInfo};
use selfprompt::eval::{
    emit_overlay, emit_report, load_sample, load_train_set, predict_sample, run_experiment, sample_shots,
    ExperimentConfig, Prediction, ShotCount,
};
use selfprompt::prompt::{MorphConfig, PerturbConfig, SquareKernel};

use crate::config::FileConfig;
use crate::{Cli, Command, EvalArgs, FitArgs, PredictArgs, PromptArgs, TrainArgs, MODEL_ENV};

pub enum Failure {
    Usage(String),
    Runtime(anyhow::Error),
}

impl From<selfprompt::Error> for Failure {
    fn from(e: selfprompt::Error) -> Self {
        Failure::Runtime(e.into())
    }
}

type Outcome<T = ()> = std::result::Result<T, Failure>;

fn usage<T>(msg: impl Into<String>) -> Outcome<T> {
    Err(Failure::Usage(msg.into()))
}

fn required<T>(flag: Option<T>, file: Option<T>, name: &str) -> Outcome<T> {
    match flag.or(file) {
        Some(v) => Ok(v),
        None => usage(format!("missing required --{name} (flag or config key)")),
    }
}

fn parse_in_config<T: std::str::FromStr>(v: Option<&String>, key: &str) -> Outcome<Option<T>>
where
    T::Err: std::fmt::Display,
{
    v.map(|s| s.parse::<T>().or_else(|e| usage(format!("config {key}: {e}"))))
        .transpose()
}

pub fn run(cli: Cli) -> Outcome {
    let file = match &cli.config {
        Some(p) => FileConfig::load(p).map_err(Failure::Usage)?,
        None => FileConfig::default(),
    };
    match cli.command {
        Command::Fit(a) => fit(a, &file),
        Command::Predict(a) => predict(a, &file, false),
        Command::Overlay(a) => predict(a, &file, true),
        Command::Eval(a) => eval(a, &file),
    }
}

fn train_config(a: &TrainArgs, file: &FileConfig, seed: u64) -> TrainConfig {
    let d = TrainConfig::default();
    TrainConfig {
        max_iterations: a.max_iterations.or(file.max_iterations).unwrap_or(d.max_iterations),
        convergence_tolerance: a.tolerance.or(file.tolerance).unwrap_or(d.convergence_tolerance),
        regularization_weight: a.lambda.or(file.lambda).unwrap_or(d.regularization_weight),
        seed,
        ..d
    }
}

fn prompt_config(a: &PromptArgs, file: &FileConfig, seed: u64) -> Outcome<(MorphConfig, PerturbConfig)> {
    let dm = MorphConfig::default();
    let kernel = match a.kernel.or(file.kernel) {
        Some(k) => SquareKernel::new(k).or_else(|e| usage(format!("--kernel: {e}")))?,
        None => dm.kernel,
    };
    let morph = MorphConfig {
        kernel,
        erosion_iterations: a.erosion_iterations.or(file.erosion_iterations).unwrap_or(dm.erosion_iterations),
        dilation_iterations: a.dilation_iterations.or(file.dilation_iterations).unwrap_or(dm.dilation_iterations),
    };
    let dp = PerturbConfig::default();
    let perturb = PerturbConfig {
        enabled: a.perturb.or(file.perturb).unwrap_or(dp.enabled),
        max_pixels: a.perturb_max_pixels.or(file.perturb_max_pixels).unwrap_or(dp.max_pixels),
        seed: a.perturb_seed.or(file.perturb_seed).unwrap_or(seed),
    };
    Ok((morph, perturb))
}

fn backend(flag: Option<String>, file: &FileConfig) -> Outcome<DecoderBackend> {
    let spec = flag.or_else(|| file.backend.clone()).or_else(|| {
        std::env::var(MODEL_ENV)
            .ok()
            .filter(|p| !p.is_empty())
            .map(|p| format!("model:{p}"))
    });
    match spec {
        Some(s) => s.parse().or_else(|e| usage(format!("--backend: {e}"))),
        None => Ok(DecoderBackend::Mock),
    }
}

fn manifest_path(flag: Option<PathBuf>, file: &FileConfig) -> Outcome<PathBuf> {
    required(flag, file.manifest.clone(), "manifest")
}

fn open_manifest(path: &Path) -> Outcome<SampleManifest> {
    Ok(load_manifest(path)?)
}

fn create_dir(dir: &Path) -> Outcome {
    fs::create_dir_all(dir).map_err(|e| Failure::Runtime(anyhow!("{}: {e}", dir.display())))
}

fn fit(a: FitArgs, file: &FileConfig) -> Outcome {
    let path = manifest_path(a.manifest, file)?;
    let out = required(a.out, file.out.clone(), "out")?;
    let seed = a.seed.or(file.seed).unwrap_or(0);
    let shots = match a.shots {
        Some(s) => Some(s),
        None => file.single_shot().map_err(Failure::Usage)?,
    };
    let ids = a.ids.or_else(|| file.ids.clone());
    if ids.is_some() && shots.is_some() {
        return usage("--ids and --shots are mutually exclusive");
    }
    let train = train_config(&a.train, file, seed);
    if let Err(e) = train.validate() {
        return usage(e.to_string());
    }
    let manifest = open_manifest(&path)?;
    let ids = match ids {
        Some(ids) => ids,
        None => sample_shots(&manifest.ids(), shots.unwrap_or(ShotCount::Full), seed)?,
    };
    let set = load_train_set(&manifest, &ids)?;
    let classifier = fit_classifier(&set, &train)?;
    save_classifier(&classifier, &out)?;
    Ok(())
}

fn prompts_json(id: &str, pred: &Prediction, geometry: &GeometryInfo) -> serde_json::Value {
    let original = pred.prompts.as_ref().map(|p: &PromptSet| {
        let point = p.point.map(|pt| {
            let (x, y) = geometry.to_original(pt.x, pt.y);
            json!({ "x": x, "y": y, "label": pt.label })
        });
        let bbox = p.bbox.map(|b| {
            let (x0, y0) = geometry.to_original(b.x_min, b.y_min);
            let (x1, y1) = geometry.to_original(b.x_max, b.y_max);
            json!({ "x_min": x0, "y_min": y0, "x_max": x1, "y_max": y1 })
        });
        json!({ "space": "original-image", "point": point, "box": bbox })
    });
    json!({
        "id": id,
        "mode": pred.mode,
        "unpromptable": pred.unpromptable,
        "original_height": geometry.original_height,
        "original_width": geometry.original_width,
        "prompts": pred.prompts,
        "prompts_original": original,
    })
}

fn predict(a: PredictArgs, file: &FileConfig, overlay: bool) -> Outcome {
    let path = manifest_path(a.manifest, file)?;
    let classifier_path = required(a.classifier, file.classifier.clone(), "classifier")?;
    let out = required(a.out, file.out.clone(), "out")?;
    let mode = match a.mode {
        Some(m) => m,
        None => parse_in_config(file.mode.as_ref(), "mode")?.unwrap_or(PromptMode::PointAndBox),
    };
    let seed = a.seed.or(file.seed).unwrap_or(0);
    let (morph, perturb) = prompt_config(&a.prompt, file, seed)?;
    let backend = backend(a.backend, file)?;
    let manifest = open_manifest(&path)?;
    let classifier = load_classifier(&classifier_path)?;
    let decoder = backend.open()?;
    let ids = match a.ids.or_else(|| file.ids.clone()) {
        Some(ids) => ids,
        None => manifest.ids(),
    };
    create_dir(&out)?;
    for id in &ids {
        let entry = manifest
            .entry(id)
            .ok_or_else(|| Failure::Runtime(anyhow!("id {id:?} not in manifest")))?;
        let sample = load_sample(&manifest, entry)?;
        let pred = predict_sample(&classifier, &*decoder, &sample, mode, &morph, &perturb)?;
        let png = out.join(format!("{id}.png"));
        if overlay {
            emit_overlay(&sample.geometry, &pred.mask, &sample.gt, pred.prompts.as_ref(), &png)?;
        } else {
            write_mask(&pred.mask, &png)?;
            let path = out.join(format!("{id}.prompts.json"));
            let text = serde_json::to_string_pretty(&prompts_json(id, &pred, &sample.geometry))
                .map_err(|e| Failure::Runtime(e.into()))?;
            fs::write(&path, text + "\n").map_err(|e| Failure::Runtime(anyhow!("{}: {e}", path.display())))?;
        }
    }
    Ok(())
}

fn eval(a: EvalArgs, file: &FileConfig) -> Outcome {
    let manifest_path = manifest_path(a.manifest, file)?;
    let out = required(a.out, file.out.clone(), "out")?;
    let d = ExperimentConfig::default();
    let seed = a.seed.or(file.seed).unwrap_or(d.seed);
    let shot_counts = match a.shots {
        Some(s) => s,
        None => file.shot_list().map_err(Failure::Usage)?.unwrap_or(d.shot_counts),
    };
    let modes = match a.modes {
        Some(m) => m,
        None => match &file.modes {
            Some(list) => list
                .iter()
                .map(|m| parse_in_config(Some(m), "modes").map(Option::unwrap))
                .collect::<Outcome<Vec<_>>>()?,
            None => d.modes,
        },
    };
    let (morph, perturb) = prompt_config(&a.prompt, file, seed)?;
    let dataset = a.dataset.or_else(|| file.dataset.clone()).unwrap_or_else(|| {
        manifest_path
            .file_stem()
            .map(|s| s.to_string_lossy().into_owned())
            .unwrap_or(d.dataset)
    });
    let config = ExperimentConfig {
        dataset,
        folds: a.folds.or(file.folds).unwrap_or(d.folds),
        shot_counts,
        modes,
        seed,
        morph,
        perturb,
        train: train_config(&a.train, file, seed),
        backend: backend(a.backend, file)?,
        workers: a.workers.or(file.workers).unwrap_or(d.workers),
    };
    if let Err(e) = config.validate() {
        return usage(e.to_string());
    }
    let manifest = open_manifest(&manifest_path)?;
    let report = run_experiment(&config, &manifest)?;
    if let Some(dir) = out.parent().filter(|p| !p.as_os_str().is_empty()) {
        create_dir(dir)?;
    }
    emit_report(&report, &out)?;
    print!("{}", selfprompt::eval::report_markdown(&report));
    Ok(())
}
