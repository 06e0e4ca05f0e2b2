//! `selfprompt`: fit, predict, evaluate and inspect the self-prompting
//! pipeline from the command line.
//!
//! Exit codes: 0 success, 1 runtime error, 2 usage error.

mod commands;
mod config;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use selfprompt::data::PromptMode;
use selfprompt::eval::ShotCount;

/// Environment variable naming the default external decoder model.
pub const MODEL_ENV: &str = "SELFPROMPT_MODEL";

#[derive(Debug, Parser)]
#[command(name = "selfprompt", version, about = "Few-shot self-prompting segmentation over frozen encoder embeddings")]
pub struct Cli {
    /// TOML file supplying defaults for any flag below (same names, kebab-case).
    /// Command-line flags take precedence.
    #[arg(long, global = true, value_name = "FILE")]
    pub config: Option<PathBuf>,

    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Fit the pixel classifier on labelled samples and write an SPLC file.
    Fit(FitArgs),
    /// Predict masks for manifest samples; writes <id>.png and <id>.prompts.json.
    Predict(PredictArgs),
    /// Run the k-fold few-shot experiment; writes a CSV report and a markdown summary.
    Eval(EvalArgs),
    /// Render prediction/ground-truth overlays as <id>.png.
    Overlay(PredictArgs),
}

#[derive(Debug, Args)]
pub struct TrainArgs {
    /// Maximum optimizer iterations [default: 1000]
    #[arg(long, value_name = "N")]
    pub max_iterations: Option<usize>,
    /// Relative convergence tolerance [default: 1e-6]
    #[arg(long, value_name = "TOL")]
    pub tolerance: Option<f64>,
    /// Weight of the L2 penalty on the classifier weights [default: 0.5]
    #[arg(long, value_name = "LAMBDA")]
    pub lambda: Option<f64>,
}

#[derive(Debug, Args)]
pub struct PromptArgs {
    /// Side of the square structuring element, odd [default: 5]
    #[arg(long, value_name = "SIZE")]
    pub kernel: Option<usize>,
    /// Erosion passes before prompting [default: 3]
    #[arg(long, value_name = "N")]
    pub erosion_iterations: Option<usize>,
    /// Dilation passes after erosion [default: 5]
    #[arg(long, value_name = "N")]
    pub dilation_iterations: Option<usize>,
    /// Randomly enlarge the box prompt [default: true]
    #[arg(long, value_name = "BOOL")]
    pub perturb: Option<bool>,
    /// Largest outward shift per box side, in 256-grid pixels [default: 20]
    #[arg(long, value_name = "PX")]
    pub perturb_max_pixels: Option<usize>,
    /// Seed for box perturbation [default: the --seed value]
    #[arg(long, value_name = "SEED")]
    pub perturb_seed: Option<u64>,
}

#[derive(Debug, Args)]
pub struct FitArgs {
    /// Sample manifest (JSON)
    #[arg(long, value_name = "FILE")]
    pub manifest: Option<PathBuf>,
    /// Number of training samples drawn from the manifest, or `full` [default: full]
    #[arg(long, value_name = "N|full")]
    pub shots: Option<ShotCount>,
    /// Train on exactly these ids instead of drawing shots (comma separated)
    #[arg(long, value_delimiter = ',', value_name = "ID,..")]
    pub ids: Option<Vec<String>>,
    /// Seed for the shot draw [default: 0]
    #[arg(long)]
    pub seed: Option<u64>,
    /// Output classifier file (SPLC)
    #[arg(long, value_name = "FILE")]
    pub out: Option<PathBuf>,
    #[command(flatten)]
    pub train: TrainArgs,
}

#[derive(Debug, Args)]
pub struct PredictArgs {
    /// Sample manifest (JSON)
    #[arg(long, value_name = "FILE")]
    pub manifest: Option<PathBuf>,
    /// Classifier file written by `fit`
    #[arg(long, value_name = "FILE")]
    pub classifier: Option<PathBuf>,
    /// Output directory
    #[arg(long, value_name = "DIR")]
    pub out: Option<PathBuf>,
    /// Prompt mode: linear-only, point, box, point-and-box [default: point-and-box]
    #[arg(long)]
    pub mode: Option<PromptMode>,
    /// Decoder: `mock` or `model:<path>` [default: model:$SELFPROMPT_MODEL if set, else mock]
    #[arg(long, value_name = "SPEC")]
    pub backend: Option<String>,
    /// Only these ids (comma separated) [default: every manifest entry]
    #[arg(long, value_delimiter = ',', value_name = "ID,..")]
    pub ids: Option<Vec<String>>,
    /// Seed for box perturbation unless --perturb-seed is given [default: 0]
    #[arg(long)]
    pub seed: Option<u64>,
    #[command(flatten)]
    pub prompt: PromptArgs,
}

#[derive(Debug, Args)]
pub struct EvalArgs {
    /// Sample manifest (JSON)
    #[arg(long, value_name = "FILE")]
    pub manifest: Option<PathBuf>,
    /// Output CSV; the markdown summary goes next to it with a .md extension
    #[arg(long, value_name = "FILE")]
    pub out: Option<PathBuf>,
    /// Dataset label written into the report [default: manifest file stem]
    #[arg(long)]
    pub dataset: Option<String>,
    /// Number of cross-validation folds [default: 5]
    #[arg(long)]
    pub folds: Option<usize>,
    /// Shot counts, comma separated; `full` uses the whole training pool [default: 10,20,40,full]
    #[arg(long, value_delimiter = ',', value_name = "N|full,..")]
    pub shots: Option<Vec<ShotCount>>,
    /// Prompt modes, comma separated [default: linear-only,point,box,point-and-box]
    #[arg(long, value_delimiter = ',', value_name = "MODE,..")]
    pub modes: Option<Vec<PromptMode>>,
    /// Seed for fold splits, shot draws and (unless --perturb-seed) box perturbation [default: 0]
    #[arg(long)]
    pub seed: Option<u64>,
    /// Decoder: `mock` or `model:<path>` [default: model:$SELFPROMPT_MODEL if set, else mock]
    #[arg(long, value_name = "SPEC")]
    pub backend: Option<String>,
    /// Worker threads for per-sample inference; results are identical for any count [default: 1]
    #[arg(long, value_name = "N")]
    pub workers: Option<usize>,
    #[command(flatten)]
    pub train: TrainArgs,
    #[command(flatten)]
    pub prompt: PromptArgs,
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(e.exit_code() as u8);
        }
    };
    match commands::run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(commands::Failure::Usage(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(2)
        }
        Err(commands::Failure::Runtime(e)) => {
            eprintln!("error: {e}");
            ExitCode::from(1)
        }
    }
}
