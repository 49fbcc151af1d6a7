//! Run configuration, read from TOML.
//!
//! ```toml
//! seed = 7
//!
//! [dataset]
//! manifest = "data/deap"          # or: synthetic = { ... }
//!
//! [transform]
//! preset = "deap"                 # or: steps = [{ op = "notch", f0_hz = 50.0 }, ...]
//!
//! [ground_truth]
//! kind = "dimensional_binary"
//! dimension = "valence"
//! threshold = 4.5
//!
//! [split]
//! kind = "loso"
//! train_ratio = 0.8
//!
//! [model]
//! kind = "bandpower_mlp"
//!
//! [training]
//! epochs = 200
//!
//! [logging]
//! output_dir = "runs/deap-loso"
//! ```
//!
//! Relative paths are resolved against the directory holding the config
//! file.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use super::RunError;
use crate::dataset::{DatasetManifest, LabelSchema, SyntheticSpec};
use crate::labeling::GroundTruthScheme;
use crate::models::{ClassifierSpec, TrainingSpec};
use crate::splitting::SplitScheme;
use crate::transform::TransformSpec;

/// Overrides the fold worker count when the config leaves it unset.
pub const WORKERS_ENV: &str = "EMOEVAL_WORKERS";

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DatasetSource {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub manifest: Option<PathBuf>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub synthetic: Option<SyntheticSpec>,
    /// Where a synthetic dataset is written; defaults to `<output_dir>/dataset`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub synthetic_dir: Option<PathBuf>,
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TransformConfig {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub preset: Option<String>,
    /// Explicit steps. After resolution these always hold the expanded
    /// preset.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub steps: Option<TransformSpec>,
}

fn default_train_ratio() -> f64 {
    0.8
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SplitConfig {
    #[serde(flatten)]
    pub scheme: SplitScheme,
    /// Share of each class's training units kept for fitting; the rest
    /// validates.
    #[serde(default = "default_train_ratio")]
    pub train_ratio: f64,
}

fn default_output_dir() -> PathBuf {
    PathBuf::from("runs")
}

fn yes() -> bool {
    true
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LoggingConfig {
    #[serde(default = "default_output_dir")]
    pub output_dir: PathBuf,
    #[serde(default = "yes")]
    pub log_predictions: bool,
    /// Also report accuracy after a majority vote over each trial's windows.
    #[serde(default)]
    pub trial_vote: bool,
    /// Folds trained concurrently. Does not affect results.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub workers: Option<usize>,
}

impl Default for LoggingConfig {
    fn default() -> Self {
        Self {
            output_dir: default_output_dir(),
            log_predictions: true,
            trial_vote: false,
            workers: None,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    /// Master seed; every fold derives its own seed from it.
    #[serde(default)]
    pub seed: u64,
    pub dataset: DatasetSource,
    #[serde(default)]
    pub transform: TransformConfig,
    /// Defaults to the dataset's customary scheme when known.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub ground_truth: Option<GroundTruthScheme>,
    pub split: SplitConfig,
    pub model: ClassifierSpec,
    /// `training.seed` is ignored; fold seeds come from `seed`.
    #[serde(default)]
    pub training: TrainingSpec,
    #[serde(default)]
    pub logging: LoggingConfig,
    #[serde(skip)]
    pub base_dir: PathBuf,
}

impl RunConfig {
    pub fn from_toml_str(text: &str, base_dir: impl Into<PathBuf>) -> Result<Self, RunError> {
        let mut config: RunConfig = toml::from_str(text).map_err(|e| RunError::Config(e.to_string()))?;
        config.base_dir = base_dir.into();
        Ok(config)
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self, RunError> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path)
            .map_err(|e| RunError::Config(format!("{}: {e}", path.display())))?;
        let base = path.parent().map(Path::to_path_buf).unwrap_or_default();
        Self::from_toml_str(&text, base)
            .map_err(|e| RunError::Config(format!("{}: {}", path.display(), e.message())))
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("run config serializes")
    }

    pub fn resolve_path(&self, p: &Path) -> PathBuf {
        if p.is_absolute() {
            p.to_path_buf()
        } else {
            self.base_dir.join(p)
        }
    }

    pub fn output_dir(&self) -> PathBuf {
        self.resolve_path(&self.logging.output_dir)
    }

    pub fn dataset_dir(&self) -> Result<PathBuf, RunError> {
        match (&self.dataset.manifest, &self.dataset.synthetic) {
            (Some(m), None) => Ok(self.resolve_path(m)),
            (None, Some(_)) => Ok(match &self.dataset.synthetic_dir {
                Some(d) => self.resolve_path(d),
                None => self.output_dir().join("dataset"),
            }),
            _ => Err(RunError::Config(
                "[dataset] needs exactly one of `manifest` or `synthetic`".into(),
            )),
        }
    }

    /// Checks that need no data.
    pub fn check(&self) -> Result<(), RunError> {
        self.dataset_dir()?;
        if let (Some(_), Some(steps)) = (&self.transform.preset, &self.transform.steps) {
            let expanded = self.preset_steps()?.expect("preset set");
            if &expanded != steps {
                return Err(RunError::Config(
                    "[transform] sets both `preset` and `steps` and they differ".into(),
                ));
            }
        }
        self.preset_steps()?;
        if !(self.split.train_ratio > 0.0 && self.split.train_ratio < 1.0) {
            return Err(RunError::Config(format!(
                "split.train_ratio must be in (0, 1), got {}",
                self.split.train_ratio
            )));
        }
        self.model.validate().map_err(|e| RunError::Config(e.to_string()))?;
        self.training.validate().map_err(|e| RunError::Config(e.to_string()))?;
        if self.logging.workers == Some(0) {
            return Err(RunError::Config("logging.workers must be at least 1".into()));
        }
        Ok(())
    }

    fn preset_steps(&self) -> Result<Option<TransformSpec>, RunError> {
        self.transform
            .preset
            .as_deref()
            .map(TransformSpec::preset)
            .transpose()
            .map_err(|e| RunError::Config(e.to_string()))
    }

    pub fn transform_spec(&self) -> Result<TransformSpec, RunError> {
        Ok(match (&self.transform.steps, self.preset_steps()?) {
            (Some(s), _) => s.clone(),
            (None, Some(p)) => p,
            (None, None) => TransformSpec::default(),
        })
    }

    /// The scheme a run will use: the configured one, or a default derived
    /// from the dataset.
    pub fn ground_truth_for(&self, manifest: &DatasetManifest) -> Result<GroundTruthScheme, RunError> {
        let scheme = match &self.ground_truth {
            Some(s) => s.clone(),
            None => default_scheme(manifest, self.dataset.synthetic.as_ref()).ok_or_else(|| {
                RunError::Config(format!(
                    "no default ground truth for dataset {:?}; set [ground_truth]",
                    manifest.dataset_name
                ))
            })?,
        };
        scheme
            .validate(None)
            .map_err(|e| RunError::Config(e.to_string()))?;
        if scheme.is_categorical() && !manifest.label_schema.has_categorical() {
            return Err(RunError::Config(format!(
                "categorical ground truth needs categorical labels, but {} has {:?} labels",
                manifest.dataset_name, manifest.label_schema
            )));
        }
        if !scheme.is_categorical() && !manifest.label_schema.has_dimensional() {
            return Err(RunError::Config(format!(
                "dimensional ground truth needs ratings, but {} has {:?} labels",
                manifest.dataset_name, manifest.label_schema
            )));
        }
        Ok(scheme)
    }

    /// Copy with preset expanded, ground truth filled in and synthetic
    /// output directory fixed. Paths stay as written.
    pub fn resolved(&self, manifest: &DatasetManifest) -> Result<Self, RunError> {
        let mut out = self.clone();
        out.transform.steps = Some(self.transform_spec()?);
        out.ground_truth = Some(self.ground_truth_for(manifest)?);
        if out.dataset.synthetic.is_some() && out.dataset.synthetic_dir.is_none() {
            out.dataset.synthetic_dir = Some(self.logging.output_dir.join("dataset"));
        }
        out.training.seed = 0;
        // Parallelism never changes results, so it is not part of the record.
        out.logging.workers = None;
        Ok(out)
    }

    /// Worker count: config, then the environment, then all cores.
    pub fn workers(&self) -> Option<usize> {
        self.logging.workers.or_else(|| {
            std::env::var(WORKERS_ENV)
                .ok()
                .and_then(|v| v.trim().parse().ok())
                .filter(|&n| n > 0)
        })
    }
}

fn default_scheme(manifest: &DatasetManifest, synthetic: Option<&SyntheticSpec>) -> Option<GroundTruthScheme> {
    use crate::dataset::Dimension;
    if let Some(s) = GroundTruthScheme::dataset_default(&manifest.dataset_name, Dimension::Valence) {
        return Some(s);
    }
    if manifest.label_schema == LabelSchema::Categorical {
        return manifest
            .categorical_classes
            .as_deref()
            .map(GroundTruthScheme::categorical);
    }
    // Synthetic ratings sit on whole points of a 1-9 scale, split at 4.5.
    synthetic.and_then(|spec| match spec.class_effect.len() {
        2 => Some(GroundTruthScheme::binary(Dimension::Valence, 4.5)),
        4 => Some(GroundTruthScheme::quadrant(4.5, 4.5)),
        _ => None,
    })
}
