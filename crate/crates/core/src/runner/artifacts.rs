//! Predictions CSV, per-fold history sidecars, the run summary, and report
//! rendering.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::path::{Path, PathBuf};
use std::time::Instant;

use serde::{Deserialize, Serialize};

use super::{FoldOutcome, RunConfig, RunError};
use crate::dataset::TrialKey;
use crate::metrics::{AggregateReport, MetricReport};
use crate::splitting::FoldPlan;

pub const SUMMARY_SCHEMA_VERSION: u32 = 1;
pub const PREDICTIONS_FILE: &str = "predictions.csv";
pub const SUMMARY_FILE: &str = "summary.json";
pub const HISTORY_DIR: &str = "history";

/// Wall-clock seconds per stage and the thread count they ran on. Excluded
/// from every determinism check.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct Timings {
    #[serde(default)]
    pub workers: usize,
    pub stages: BTreeMap<String, f64>,
    pub folds: Vec<BTreeMap<String, f64>>,
    pub total_s: f64,
}

impl Timings {
    pub(super) fn stage(&mut self, name: &str, since: Instant) {
        self.stages
            .insert(format!("{name}_s"), since.elapsed().as_secs_f64());
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FoldSummary {
    pub fold_index: usize,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub scope: Option<String>,
    pub seed: u64,
    pub n_train_windows: usize,
    pub n_val_windows: usize,
    pub n_test_windows: usize,
    pub n_train_trials: usize,
    pub n_val_trials: usize,
    pub n_test_trials: usize,
    pub selected_epoch: usize,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub warnings: Vec<String>,
    pub report: MetricReport,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RunSummary {
    pub schema_version: u32,
    pub run_id: String,
    pub code_version: String,
    pub dataset_name: String,
    pub class_names: Vec<String>,
    /// Fully resolved: preset expanded, ground truth filled in.
    pub config: RunConfig,
    pub fold_plan: Vec<FoldPlan>,
    pub folds: Vec<FoldSummary>,
    pub aggregate: AggregateReport,
    pub timings: Timings,
}

impl RunSummary {
    pub fn load(path: impl AsRef<Path>) -> Result<Self, RunError> {
        let path = path.as_ref();
        let fail = |message: String| RunError::Stage {
            stage: "report",
            message: format!("{}: {message}", path.display()),
        };
        let text = std::fs::read_to_string(path).map_err(|e| fail(e.to_string()))?;
        let mut summary: RunSummary = serde_json::from_str(&text).map_err(|e| fail(e.to_string()))?;
        if summary.schema_version != SUMMARY_SCHEMA_VERSION {
            return Err(fail(format!(
                "unsupported summary schema_version {}",
                summary.schema_version
            )));
        }
        summary.aggregate.folds = summary.folds.iter().map(|f| f.report.clone()).collect();
        Ok(summary)
    }

    pub fn to_json(&self) -> String {
        let mut s = serde_json::to_string_pretty(self).expect("summary serializes");
        s.push('\n');
        s
    }
}

/// One test window's prediction.
#[derive(Clone, Debug, PartialEq)]
pub struct PredictionRow {
    pub run_id: String,
    pub fold_index: usize,
    pub trial: TrialKey,
    pub window_index: usize,
    pub selected_epoch: usize,
    pub true_label: usize,
    pub predicted_label: usize,
    pub probabilities: Vec<f64>,
}

fn output_error(path: &Path, e: impl std::fmt::Display) -> RunError {
    RunError::Output {
        path: path.to_path_buf(),
        message: e.to_string(),
    }
}

fn predictions_csv(rows: &[&PredictionRow], class_names: &[String]) -> Result<Vec<u8>, csv::Error> {
    let mut w = csv::WriterBuilder::new()
        .terminator(csv::Terminator::Any(b'\n'))
        .from_writer(Vec::new());
    let mut header: Vec<String> = [
        "run_id",
        "fold_index",
        "subject_id",
        "session_id",
        "trial_id",
        "window_index",
        "selected_epoch",
        "true_label",
        "predicted_label",
    ]
    .iter()
    .map(|s| s.to_string())
    .collect();
    header.extend(class_names.iter().map(|c| format!("prob_{c}")));
    w.write_record(&header)?;
    for r in rows {
        let mut record = vec![
            r.run_id.clone(),
            r.fold_index.to_string(),
            r.trial.subject_id.clone(),
            r.trial.session_id.clone(),
            r.trial.trial_id.clone(),
            r.window_index.to_string(),
            r.selected_epoch.to_string(),
            class_names[r.true_label].clone(),
            class_names[r.predicted_label].clone(),
        ];
        record.extend(r.probabilities.iter().map(f64::to_string));
        w.write_record(&record)?;
    }
    Ok(w.into_inner().expect("in-memory writer"))
}

fn history_csv(fold_index: usize, history: &[crate::models::EpochRecord]) -> Result<Vec<u8>, csv::Error> {
    let mut w = csv::WriterBuilder::new()
        .terminator(csv::Terminator::Any(b'\n'))
        .from_writer(Vec::new());
    w.write_record(["fold_index", "epoch", "train_loss", "val_accuracy"])?;
    for h in history {
        w.write_record([
            fold_index.to_string(),
            h.epoch.to_string(),
            h.train_loss.to_string(),
            h.val_accuracy.to_string(),
        ])?;
    }
    Ok(w.into_inner().expect("in-memory writer"))
}

/// Write every artifact; on failure remove whatever was written.
pub(super) fn write_all(
    dir: &Path,
    summary: &RunSummary,
    outcomes: &[FoldOutcome],
    log_predictions: bool,
    started: Instant,
) -> Result<(Option<PathBuf>, PathBuf, Vec<PathBuf>), RunError> {
    let mut written: Vec<PathBuf> = Vec::new();
    let result = write_inner(dir, summary, outcomes, log_predictions, started, &mut written);
    if result.is_err() {
        for p in &written {
            let _ = std::fs::remove_file(p);
        }
    }
    result
}

fn write_inner(
    dir: &Path,
    summary: &RunSummary,
    outcomes: &[FoldOutcome],
    log_predictions: bool,
    started: Instant,
    written: &mut Vec<PathBuf>,
) -> Result<(Option<PathBuf>, PathBuf, Vec<PathBuf>), RunError> {
    let t = Instant::now();
    let history_dir = dir.join(HISTORY_DIR);
    std::fs::create_dir_all(&history_dir).map_err(|e| output_error(&history_dir, e))?;
    let mut put = |path: PathBuf, bytes: &[u8]| -> Result<PathBuf, RunError> {
        std::fs::write(&path, bytes).map_err(|e| output_error(&path, e))?;
        written.push(path.clone());
        Ok(path)
    };

    let predictions = if log_predictions {
        let rows: Vec<&PredictionRow> = outcomes.iter().flat_map(|o| &o.rows).collect();
        let path = dir.join(PREDICTIONS_FILE);
        let bytes = predictions_csv(&rows, &summary.class_names).map_err(|e| output_error(&path, e))?;
        Some(put(path, &bytes)?)
    } else {
        None
    };
    let mut history = Vec::with_capacity(outcomes.len());
    for o in outcomes {
        let index = o.summary.fold_index;
        let path = history_dir.join(format!("fold_{index:03}.csv"));
        let bytes = history_csv(index, &o.history).map_err(|e| output_error(&path, e))?;
        history.push(put(path, &bytes)?);
    }
    let mut summary = summary.clone();
    summary.timings.stage("write", t);
    summary.timings.total_s = started.elapsed().as_secs_f64();
    let summary_path = put(dir.join(SUMMARY_FILE), summary.to_json().as_bytes())?;
    Ok((predictions, summary_path, history))
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub enum ReportFormat {
    #[default]
    Table,
    Csv,
}

impl std::str::FromStr for ReportFormat {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "table" => Ok(ReportFormat::Table),
            "csv" => Ok(ReportFormat::Csv),
            other => Err(format!("unknown report format {other:?} (expected table or csv)")),
        }
    }
}

/// Aggregate metrics as mean ± sample std across folds, followed (in table
/// form) by per-fold accuracy and F1.
pub fn render_report(summary: &RunSummary, format: ReportFormat) -> String {
    let mut out = String::new();
    match format {
        ReportFormat::Csv => {
            out.push_str("metric,mean,std\n");
            for (name, m) in &summary.aggregate.metrics {
                let _ = writeln!(out, "{name},{},{}", m.mean, m.std);
            }
        }
        ReportFormat::Table => {
            let c = &summary.config;
            let _ = writeln!(out, "run      {}", summary.run_id);
            let _ = writeln!(
                out,
                "setup    {} | {} | {} | {} folds",
                summary.dataset_name,
                c.split.scheme,
                c.model.name(),
                summary.aggregate.n_folds
            );
            let _ = writeln!(out, "classes  {}", summary.class_names.join(", "));
            out.push('\n');
            let _ = writeln!(out, "{:<16}mean ± std", "metric");
            for (name, m) in &summary.aggregate.metrics {
                let _ = writeln!(out, "{name:<16}{m}");
            }
            out.push('\n');
            let _ = writeln!(
                out,
                "{:<6}{:<10}{:>8}{:>8}{:>10}{:>8}",
                "fold", "scope", "test", "epoch", "accuracy", "f1"
            );
            for f in &summary.folds {
                let _ = writeln!(
                    out,
                    "{:<6}{:<10}{:>8}{:>8}{:>10.4}{:>8.4}",
                    f.fold_index,
                    f.scope.as_deref().unwrap_or("-"),
                    f.n_test_windows,
                    f.selected_epoch,
                    f.report.accuracy,
                    f.report.macro_f1
                );
            }
        }
    }
    out
}
