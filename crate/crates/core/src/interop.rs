//! Flat entry points for foreign-language bindings. They only delegate, so
//! a binding built on them computes nothing of its own.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use crate::dataset::{DatasetError, DatasetManifest, SyntheticSpec};
use crate::metrics::{MetricError, MetricReport};
use crate::runner::{RunConfig, RunError};

pub fn load_manifest(path: impl AsRef<Path>) -> Result<DatasetManifest, DatasetError> {
    crate::dataset::load_manifest(path)
}

pub fn generate_synthetic(spec: &SyntheticSpec, out: impl AsRef<Path>) -> Result<DatasetManifest, DatasetError> {
    crate::dataset::generate_synthetic(spec, out.as_ref())
}

/// Result of [`run`] as plain maps and paths.
#[derive(Clone, Debug, PartialEq)]
pub struct RunResult {
    pub run_id: String,
    pub n_folds: usize,
    /// Metric name → (mean, sample std) across folds.
    pub metrics: BTreeMap<String, (f64, f64)>,
    pub summary_path: PathBuf,
    pub predictions_path: Option<PathBuf>,
}

pub fn run(config_path: impl AsRef<Path>) -> Result<RunResult, RunError> {
    let config = RunConfig::load(config_path)?;
    let artifacts = crate::runner::execute_run(&config)?;
    Ok(RunResult {
        run_id: artifacts.run_id,
        n_folds: artifacts.aggregate.n_folds,
        metrics: artifacts
            .aggregate
            .metrics
            .iter()
            .map(|(name, m)| (name.clone(), (m.mean, m.std)))
            .collect(),
        summary_path: artifacts.summary,
        predictions_path: artifacts.predictions,
    })
}

/// Scalar metrics by name, identical to [`MetricReport::scalars`].
pub fn metrics(y_true: &[usize], y_pred: &[usize], n_classes: usize) -> Result<BTreeMap<String, f64>, MetricError> {
    let report = MetricReport::from_labels(y_true, y_pred, n_classes)?;
    Ok(report
        .scalars()
        .into_iter()
        .map(|(name, v)| (name.to_string(), v))
        .collect())
}
