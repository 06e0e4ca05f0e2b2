//! CSV and markdown renderings of a [`MetricReport`].
//!
//! CSV: `#`-prefixed `key=value` parameter lines, then the header
//! `dataset,fold,shots,mode,dice_pct,iou_pct,n`, one row per fold cell and
//! one pooled row per `(shots, mode)` with `fold = all`. Values use four
//! decimals and LF line endings.

use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use super::experiment::MetricReport;
use crate::error::{Error, Result};

pub const CSV_HEADER: &str = "dataset,fold,shots,mode,dice_pct,iou_pct,n";

pub fn report_csv(report: &MetricReport) -> String {
    let mut out = String::new();
    for (k, v) in &report.parameters {
        let _ = writeln!(out, "# {k}={v}");
    }
    out.push_str(CSV_HEADER);
    out.push('\n');
    for c in &report.cells {
        let _ = writeln!(
            out,
            "{},{},{},{},{:.4},{:.4},{}",
            report.dataset,
            c.fold,
            c.shots,
            c.mode,
            c.mean_dice_pct(),
            c.mean_iou_pct(),
            c.samples.len()
        );
    }
    for a in report.aggregate() {
        let _ = writeln!(
            out,
            "{},all,{},{},{:.4},{:.4},{}",
            report.dataset, a.shots, a.mode, a.mean_dice_pct, a.mean_iou_pct, a.n
        );
    }
    out
}

/// Modes as rows, shot counts as columns, `Dice / IoU` (percent) per cell.
pub fn report_markdown(report: &MetricReport) -> String {
    let rows = report.aggregate();
    let mut shots = Vec::new();
    let mut modes = Vec::new();
    for r in &rows {
        if !shots.contains(&r.shots) {
            shots.push(r.shots);
        }
        if !modes.contains(&r.mode) {
            modes.push(r.mode);
        }
    }
    let mut out = format!("## {}\n\nMean Dice / IoU (%) pooled over folds.\n\n| mode |", report.dataset);
    for s in &shots {
        let _ = write!(out, " {s} shots |");
    }
    out.push_str("\n|---|");
    out.push_str(&"---|".repeat(shots.len()));
    out.push('\n');
    for m in &modes {
        let _ = write!(out, "| {m} |");
        for s in &shots {
            match rows.iter().find(|r| r.mode == *m && r.shots == *s) {
                Some(r) => {
                    let _ = write!(out, " {:.2} / {:.2} |", r.mean_dice_pct, r.mean_iou_pct);
                }
                None => out.push_str(" - |"),
            }
        }
        out.push('\n');
    }
    out
}

/// Writes the CSV to `path` and the markdown summary next to it (`.md`).
/// Returns the markdown path.
pub fn emit_report(report: &MetricReport, path: impl AsRef<Path>) -> Result<PathBuf> {
    let path = path.as_ref();
    fs::write(path, report_csv(report)).map_err(|e| Error::io(path, e))?;
    let md = path.with_extension("md");
    fs::write(&md, report_markdown(report)).map_err(|e| Error::io(&md, e))?;
    Ok(md)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::data::PromptMode;
    use crate::eval::{CellReport, SampleScore, ShotCount};

    fn score(id: &str, dice: f64, iou: f64) -> SampleScore {
        SampleScore {
            id: id.into(),
            dice,
            iou,
        }
    }

    #[test]
    fn empty_report_is_header_only() {
        let csv = report_csv(&MetricReport::default());
        assert_eq!(csv, format!("{CSV_HEADER}\n"));
    }

    #[test]
    fn two_row_golden() {
        let report = MetricReport {
            dataset: "toy".into(),
            parameters: vec![("seed".into(), "7".into())],
            cells: vec![
                CellReport {
                    fold: 0,
                    shots: ShotCount::Count(2),
                    mode: PromptMode::PointAndBox,
                    samples: vec![score("a", 1.0, 1.0), score("b", 0.5, 1.0 / 3.0)],
                },
                CellReport {
                    fold: 1,
                    shots: ShotCount::Count(2),
                    mode: PromptMode::PointAndBox,
                    samples: vec![score("c", 0.0, 0.0)],
                },
            ],
        };
        let golden = "# seed=7\n\
dataset,fold,shots,mode,dice_pct,iou_pct,n\n\
toy,0,2,point-and-box,75.0000,66.6667,2\n\
toy,1,2,point-and-box,0.0000,0.0000,1\n\
toy,all,2,point-and-box,50.0000,44.4444,3\n";
        assert_eq!(report_csv(&report), golden);

        let md = report_markdown(&report);
        assert!(md.contains("| point-and-box | 50.00 / 44.44 |"));

        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("r.csv");
        let mdp = emit_report(&report, &p).unwrap();
        assert_eq!(fs::read_to_string(&p).unwrap(), golden);
        assert!(mdp.exists());
    }
}
