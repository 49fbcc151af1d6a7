//! Config-driven experiments: load, label, transform, split, fit, evaluate
//! and write every artifact of a run.
//!
//! A run is a pure function of dataset bytes, configuration and master seed.
//! Fold seeds come from [`mix_seed`](crate::seed::mix_seed) of the master
//! seed and fold index, folds are collected in plan order whatever the worker
//! count, and all files are written once after the last fold finishes.

mod artifacts;
mod config;

use std::collections::{BTreeMap, BTreeSet};
use std::path::PathBuf;
use std::time::Instant;

use rayon::prelude::*;
use sha2::{Digest, Sha256};
use thiserror::Error;

use crate::dataset::{generate_synthetic, load_manifest, read_trial_signal, DatasetManifest, TrialKey};
use crate::labeling::{ClassLabel, GroundTruthScheme};
use crate::metrics::{aggregate, majority_vote, AggregateReport, MetricReport};
use crate::models::{fit, predict, EpochRecord, ModelRegistry, TrainingSpec};
use crate::seed::mix_seed;
use crate::splitting::{materialize_fold, plan_folds, train_val_split, FoldPlan, Side, Unit};
use crate::transform::{apply_pipeline, TransformSpec, WindowSegment};

pub use artifacts::{
    render_report, FoldSummary, PredictionRow, ReportFormat, RunSummary, Timings, HISTORY_DIR,
    PREDICTIONS_FILE, SUMMARY_FILE, SUMMARY_SCHEMA_VERSION,
};
pub use config::{DatasetSource, LoggingConfig, RunConfig, SplitConfig, TransformConfig, WORKERS_ENV};

#[derive(Debug, Error)]
pub enum RunError {
    #[error("config: {0}")]
    Config(String),
    /// A failure before any fold runs (loading, labeling, transforming,
    /// planning).
    #[error("stage {stage}: {message}")]
    Stage { stage: &'static str, message: String },
    #[error("fold {fold}, stage {stage}: {message}")]
    Fold {
        fold: usize,
        stage: &'static str,
        message: String,
    },
    #[error("writing {}: {message}", path.display())]
    Output { path: PathBuf, message: String },
}

impl RunError {
    pub fn message(&self) -> String {
        match self {
            RunError::Config(m) => m.clone(),
            other => other.to_string(),
        }
    }

    /// Whether the input (config or dataset) is at fault rather than the
    /// run itself.
    pub fn is_data_error(&self) -> bool {
        matches!(self, RunError::Config(_) | RunError::Stage { .. })
    }

    fn stage(stage: &'static str, e: impl std::fmt::Display) -> Self {
        RunError::Stage {
            stage,
            message: e.to_string(),
        }
    }

    fn fold(fold: usize, stage: &'static str, e: impl std::fmt::Display) -> Self {
        RunError::Fold {
            fold,
            stage,
            message: e.to_string(),
        }
    }
}

/// Files written by a successful run.
#[derive(Clone, Debug)]
pub struct RunArtifacts {
    pub run_id: String,
    pub output_dir: PathBuf,
    pub predictions: Option<PathBuf>,
    pub summary: PathBuf,
    pub history: Vec<PathBuf>,
    pub aggregate: AggregateReport,
}

/// Hex SHA-256 of the resolved config (without worker count) and the code
/// version.
pub fn run_id(resolved: &RunConfig) -> String {
    let mut keyed = resolved.clone();
    keyed.logging.workers = None;
    let json = serde_json::to_string(&keyed).expect("config serializes");
    let mut hasher = Sha256::new();
    hasher.update(json.as_bytes());
    hasher.update(b"\n");
    hasher.update(crate::CODE_VERSION.as_bytes());
    hex::encode(hasher.finalize())
}

/// Everything one fold produces.
#[derive(Clone, Debug)]
pub struct FoldOutcome {
    pub summary: FoldSummary,
    pub history: Vec<EpochRecord>,
    pub rows: Vec<PredictionRow>,
    pub timings: BTreeMap<String, f64>,
}

struct Prepared {
    manifest: DatasetManifest,
    scheme: GroundTruthScheme,
    /// Windows of every trial, in manifest order.
    windows: Vec<(TrialKey, ClassLabel, Vec<WindowSegment>)>,
}

pub fn execute_run(config: &RunConfig) -> Result<RunArtifacts, RunError> {
    execute_run_with(config, &ModelRegistry::new())
}

/// [`execute_run`] with external classifiers available to `[model]`.
pub fn execute_run_with(config: &RunConfig, registry: &ModelRegistry) -> Result<RunArtifacts, RunError> {
    let started = Instant::now();
    config.check()?;
    let mut timings = Timings::default();
    let mut builder = rayon::ThreadPoolBuilder::new();
    if let Some(n) = config.workers() {
        builder = builder.num_threads(n);
    }
    let pool = builder
        .build()
        .map_err(|e| RunError::stage("setup", e))?;

    timings.workers = pool.current_num_threads();

    let t = Instant::now();
    let manifest = load_dataset(config)?;
    timings.stage("load", t);

    let resolved = config.resolved(&manifest)?;
    let run_id = run_id(&resolved);
    let scheme = resolved.ground_truth.clone().expect("resolved");
    let spec = resolved.transform.steps.clone().expect("resolved");
    log::info!("run {run_id}: {} on {}", resolved.split.scheme, manifest.dataset_name);

    let t = Instant::now();
    let prepared = pool.install(|| prepare(manifest, scheme, &spec))?;
    timings.stage("label_transform", t);

    let t = Instant::now();
    let plan = plan_folds(&prepared.manifest, &resolved.split.scheme).map_err(|e| RunError::stage("split", e))?;
    timings.stage("split", t);

    let outcomes: Vec<FoldOutcome> = pool.install(|| {
        plan.par_iter()
            .map(|fold| run_fold(&resolved, &prepared, fold, &run_id, registry))
            .collect::<Result<Vec<_>, _>>()
    })?;

    let reports: Vec<MetricReport> = outcomes.iter().map(|o| o.summary.report.clone()).collect();
    let aggregate = aggregate(&reports).map_err(|e| RunError::stage("aggregate", e))?;
    timings.folds = outcomes.iter().map(|o| o.timings.clone()).collect();

    let summary = RunSummary {
        schema_version: SUMMARY_SCHEMA_VERSION,
        run_id: run_id.clone(),
        code_version: crate::CODE_VERSION.to_string(),
        dataset_name: prepared.manifest.dataset_name.clone(),
        class_names: prepared.scheme.class_names().to_vec(),
        config: resolved.clone(),
        fold_plan: plan,
        folds: outcomes.iter().map(|o| o.summary.clone()).collect(),
        aggregate: aggregate.clone(),
        timings,
    };
    let output_dir = config.output_dir();
    artifacts::write_all(&output_dir, &summary, &outcomes, resolved.logging.log_predictions, started)
        .map(|(predictions, summary_path, history)| RunArtifacts {
            run_id,
            output_dir: output_dir.clone(),
            predictions,
            summary: summary_path,
            history,
            aggregate,
        })
}

fn load_dataset(config: &RunConfig) -> Result<DatasetManifest, RunError> {
    let dir = config.dataset_dir()?;
    match &config.dataset.synthetic {
        Some(spec) => generate_synthetic(spec, &dir).map_err(|e| RunError::stage("load", e)),
        None => load_manifest(&dir).map_err(|e| RunError::stage("load", e)),
    }
}

fn prepare(manifest: DatasetManifest, scheme: GroundTruthScheme, spec: &TransformSpec) -> Result<Prepared, RunError> {
    spec.validate(manifest.sampling_rate_hz, &manifest.channel_names())
        .map_err(|e| RunError::stage("transform", e))?;
    let keys: Vec<TrialKey> = manifest.trials().map(|(k, _)| k).collect();
    let windows = keys
        .par_iter()
        .map(|key| {
            let trial = manifest.trial(key).map_err(|e| RunError::stage("load", e))?;
            let label = scheme
                .label(&trial.label)
                .map_err(|e| RunError::stage("label", format!("{key}: {e}")))?;
            let signal = read_trial_signal(&manifest, &key.subject_id, &key.session_id, &key.trial_id)
                .map_err(|e| RunError::stage("load", e))?;
            let segments = apply_pipeline(key, &signal, &label, spec)
                .map_err(|e| RunError::stage("transform", format!("{key}: {e}")))?;
            Ok((key.clone(), label, segments))
        })
        .collect::<Result<Vec<_>, RunError>>()?;
    Ok(Prepared {
        manifest,
        scheme,
        windows,
    })
}

fn run_fold(
    config: &RunConfig,
    prepared: &Prepared,
    fold: &FoldPlan,
    run_id: &str,
    registry: &ModelRegistry,
) -> Result<FoldOutcome, RunError> {
    let index = fold.fold_index;
    let fold_seed = mix_seed(config.seed, index as u64);
    let n_classes = prepared.scheme.n_classes();
    let mut timings = BTreeMap::new();

    let t = Instant::now();
    let in_fold = prepared
        .windows
        .iter()
        .filter(|(key, _, _)| fold.side_of(key).is_some());
    let candidates = in_fold.clone().flat_map(|(_, _, w)| w.iter());
    let (train_windows, test_windows) =
        materialize_fold(fold, candidates).map_err(|e| RunError::fold(index, "split", e))?;
    let units: Vec<(Unit, usize)> = in_fold
        .filter(|(key, _, _)| fold.side_of(key) == Some(Side::Train))
        .map(|(key, label, _)| (Unit::trial(key), label.index))
        .collect();
    let tv = train_val_split(&units, n_classes, config.split.train_ratio, mix_seed(fold_seed, 1))
        .map_err(|e| RunError::fold(index, "split", e))?;
    let (fit_windows, val_windows): (Vec<&WindowSegment>, Vec<&WindowSegment>) = train_windows
        .iter()
        .partition(|w| tv.train_units.contains(&Unit::trial(&w.trial)));
    if test_windows.is_empty() {
        return Err(RunError::fold(index, "split", "no test windows"));
    }
    timings.insert("split_s".to_string(), t.elapsed().as_secs_f64());

    let t = Instant::now();
    let training = TrainingSpec {
        seed: mix_seed(fold_seed, 2),
        ..config.training.clone()
    };
    let model = fit(&config.model, &fit_windows, &val_windows, n_classes, &training, registry)
        .map_err(|e| RunError::fold(index, "fit", e))?;
    timings.insert("fit_s".to_string(), t.elapsed().as_secs_f64());

    let t = Instant::now();
    let batch = predict(&model, &test_windows).map_err(|e| RunError::fold(index, "predict", e))?;
    let y_true: Vec<usize> = test_windows.iter().map(|w| w.label.index).collect();
    let mut report = MetricReport::from_labels(&y_true, &batch.classes, n_classes)
        .map_err(|e| RunError::fold(index, "evaluate", e))?;
    if config.logging.trial_vote {
        let groups: Vec<&TrialKey> = test_windows.iter().map(|w| &w.trial).collect();
        let (t_true, t_pred) = majority_vote(&groups, &y_true, &batch.classes, n_classes)
            .map_err(|e| RunError::fold(index, "evaluate", e))?;
        let hits = t_true.iter().zip(&t_pred).filter(|(a, b)| a == b).count();
        report.trial_accuracy = Some(hits as f64 / t_true.len() as f64);
    }
    let rows = test_windows
        .iter()
        .zip(batch.classes.iter().zip(&batch.probabilities))
        .map(|(w, (&pred, probs))| PredictionRow {
            run_id: run_id.to_string(),
            fold_index: index,
            trial: w.trial.clone(),
            window_index: w.window_index,
            selected_epoch: model.selected_epoch,
            true_label: w.label.index,
            predicted_label: pred,
            probabilities: probs.clone(),
        })
        .collect();
    timings.insert("evaluate_s".to_string(), t.elapsed().as_secs_f64());

    let trials_of = |ws: &[&WindowSegment]| ws.iter().map(|w| w.trial.clone()).collect::<BTreeSet<_>>().len();
    Ok(FoldOutcome {
        summary: FoldSummary {
            fold_index: index,
            scope: fold.scope.clone(),
            seed: fold_seed,
            n_train_windows: fit_windows.len(),
            n_val_windows: val_windows.len(),
            n_test_windows: test_windows.len(),
            n_train_trials: trials_of(&fit_windows),
            n_val_trials: trials_of(&val_windows),
            n_test_trials: trials_of(&test_windows),
            selected_epoch: model.selected_epoch,
            warnings: tv.warnings,
            report,
        },
        history: model.history,
        rows,
        timings,
    })
}
