//! # emoeval
//!
//! A reproducible evaluation harness for EEG-based emotion recognition.
//! Every stage that tends to vary silently between studies is made explicit
//! and logged: dataset ingestion, pre-processing, train/test splitting,
//! ground-truth definition and metric reporting.
//!
//! ```text
//! manifest.json + *.f32raw
//!   │
//!   ├─ dataset     load / validate manifests, read trials, synthetic data
//!   ├─ transform   crop, drop channels, notch, band-pass, resample,
//!   │              normalize, window
//!   ├─ labeling    ratings → class labels under a logged threshold scheme
//!   ├─ splitting   LOSO / LkSO / LOTO / LkTO / leave-one-session-out / fixed
//!   ├─ models      trivial baselines + band-power MLP behind one interface
//!   ├─ metrics     confusion matrix, accuracy, F1, MCC, kappa, mean ± std
//!   └─ runner      config-driven experiments, predictions CSV, summary JSON
//! ```
//!
//! The runnable programs under `examples/` show one capability each; the
//! `emoeval` binary exposes the same operations on the command line.

// `!(x > 0.0)` is used on purpose so that NaN fails validation.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod cli;
pub mod dataset;
pub mod interop;
pub mod labeling;
pub mod metrics;
pub mod models;
pub mod runner;
pub mod seed;
pub mod splitting;
pub mod transform;

pub use dataset::{
    dataset_summary, generate_synthetic, load_manifest, read_trial_signal, validate_manifest,
    DatasetError, DatasetManifest, SignalBlock, SyntheticSpec,
};
pub use labeling::{ClassLabel, GroundTruthScheme};
pub use metrics::{AggregateReport, ConfusionMatrix, MetricReport};
pub use models::{ClassifierSpec, TrainedModel, TrainingSpec};
pub use runner::{execute_run, RunArtifacts, RunConfig, RunError};
pub use splitting::{FoldPlan, SplitScheme};
pub use transform::{TransformSpec, TransformStep, WindowSegment};

/// Version string mixed into every run id.
pub const CODE_VERSION: &str = concat!("emoeval/", env!("CARGO_PKG_VERSION"));
