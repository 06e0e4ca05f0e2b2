//! The few-shot evaluation protocol: ground-truth alignment, overlap
//! metrics, k-fold splits, shot sampling, the prompt-mode matrix and its
//! reports.

mod align;
mod experiment;
mod metrics;
mod overlay;
mod protocol;
mod report;

pub use align::{align_gt_to_grid64, gt_coverage_grid64};
pub use experiment::{
    load_sample, load_train_set, predict_sample, run_experiment, run_experiment_with, sample_seed, AggregateRow,
    CellReport, ExperimentConfig, LoadedSample, MetricReport, Prediction, SampleScore,
};
pub use metrics::{dice, iou};
pub use overlay::{emit_overlay, render_overlay};
pub use protocol::{kfold_split, sample_shots, Fold, ShotCount};
pub use report::{emit_report, report_csv, report_markdown, CSV_HEADER};
