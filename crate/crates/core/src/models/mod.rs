//! Classifiers behind one fit/predict interface: two label-statistics
//! baselines, a band-power MLP, and externally registered models.

mod features;
mod mlp;

use std::collections::BTreeMap;
use std::fmt;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::sync::Arc;

use rand::distr::{weighted::WeightedIndex, Distribution};
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::seed::{mix_seed, rng};
use crate::transform::WindowSegment;

pub use features::{
    bandpower_features, check_bands, default_bands, periodogram, Band, Standardizer, LOG_FLOOR,
};
pub use mlp::{
    argmax, gradient_check, smoothed_target, softmax, train_mlp, EpochRecord, Layer, Mlp, MlpFit,
    GRADIENT_CHECK_MAX_BATCH, GRADIENT_CHECK_STEP,
};

#[derive(Debug, Error)]
pub enum ModelError {
    #[error("empty input: {0}")]
    Empty(String),
    #[error("feature dimension mismatch: model expects {expected}, got {actual}")]
    DimensionMismatch { expected: usize, actual: usize },
    #[error("band {band} reaches {hi_hz} Hz, above the Nyquist frequency {nyquist_hz} Hz")]
    BandAboveNyquist {
        band: String,
        hi_hz: f64,
        nyquist_hz: f64,
    },
    #[error("invalid model configuration: {0}")]
    Invalid(String),
    #[error("no external classifier registered as {0:?}")]
    UnknownExternal(String),
    #[error("external classifier {id}: {message}")]
    External { id: String, message: String },
    #[error("{}: {source}", path.display())]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
}

fn default_hidden() -> Vec<usize> {
    vec![64, 64]
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum ClassifierSpec {
    /// Always predicts the most frequent class of train + validation.
    MajorityBaseline,
    /// Draws classes at random from the train + validation class distribution.
    DistributionBaseline,
    BandpowerMlp {
        #[serde(default = "default_hidden")]
        hidden_sizes: Vec<usize>,
        #[serde(default = "default_bands")]
        bands: Vec<Band>,
    },
    /// Resolved through a [`ModelRegistry`].
    External { id: String },
}

impl ClassifierSpec {
    pub fn bandpower_mlp() -> Self {
        ClassifierSpec::BandpowerMlp {
            hidden_sizes: default_hidden(),
            bands: default_bands(),
        }
    }

    pub fn name(&self) -> &str {
        match self {
            ClassifierSpec::MajorityBaseline => "majority_baseline",
            ClassifierSpec::DistributionBaseline => "distribution_baseline",
            ClassifierSpec::BandpowerMlp { .. } => "bandpower_mlp",
            ClassifierSpec::External { id } => id,
        }
    }

    pub fn validate(&self) -> Result<(), ModelError> {
        if let ClassifierSpec::BandpowerMlp {
            hidden_sizes,
            bands,
        } = self
        {
            if hidden_sizes.contains(&0) {
                return Err(ModelError::Invalid("hidden layer sizes must be at least 1".into()));
            }
            check_bands(bands)?;
        }
        Ok(())
    }
}

fn default_epochs() -> usize {
    200
}
fn default_batch_size() -> usize {
    32
}
fn default_learning_rate() -> f64 {
    1e-3
}
fn default_label_smoothing() -> f64 {
    0.01
}
fn default_beta1() -> f64 {
    0.9
}
fn default_beta2() -> f64 {
    0.999
}
fn default_epsilon() -> f64 {
    1e-8
}

/// Optimizer settings. The optimizer is always Adam.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TrainingSpec {
    #[serde(default = "default_epochs")]
    pub epochs: usize,
    #[serde(default = "default_batch_size")]
    pub batch_size: usize,
    #[serde(default = "default_learning_rate")]
    pub learning_rate: f64,
    #[serde(default = "default_label_smoothing")]
    pub label_smoothing: f64,
    #[serde(default = "default_beta1")]
    pub beta1: f64,
    #[serde(default = "default_beta2")]
    pub beta2: f64,
    #[serde(default = "default_epsilon")]
    pub epsilon: f64,
    #[serde(default)]
    pub seed: u64,
}

impl Default for TrainingSpec {
    fn default() -> Self {
        Self {
            epochs: default_epochs(),
            batch_size: default_batch_size(),
            learning_rate: default_learning_rate(),
            label_smoothing: default_label_smoothing(),
            beta1: default_beta1(),
            beta2: default_beta2(),
            epsilon: default_epsilon(),
            seed: 0,
        }
    }
}

impl TrainingSpec {
    pub fn validate(&self) -> Result<(), ModelError> {
        if self.epochs == 0 || self.batch_size == 0 {
            return Err(ModelError::Invalid("epochs and batch_size must be at least 1".into()));
        }
        if !(self.learning_rate > 0.0 && self.epsilon > 0.0) {
            return Err(ModelError::Invalid("learning_rate and epsilon must be positive".into()));
        }
        if !(0.0..1.0).contains(&self.label_smoothing) {
            return Err(ModelError::Invalid(format!(
                "label_smoothing must be in [0, 1), got {}",
                self.label_smoothing
            )));
        }
        if !((0.0..1.0).contains(&self.beta1) && (0.0..1.0).contains(&self.beta2)) {
            return Err(ModelError::Invalid("Adam betas must be in [0, 1)".into()));
        }
        Ok(())
    }
}

/// Per-window predictions: class index plus the probability vector behind it.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct PredictionBatch {
    pub classes: Vec<usize>,
    pub probabilities: Vec<Vec<f64>>,
}

impl PredictionBatch {
    pub fn len(&self) -> usize {
        self.classes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.classes.is_empty()
    }
}

/// A classifier supplied by the host program, e.g. a deep network.
pub trait ExternalClassifier: Send + Sync {
    fn fit(
        &self,
        train: &[&WindowSegment],
        val: &[&WindowSegment],
        n_classes: usize,
        training: &TrainingSpec,
    ) -> Result<ExternalFit, ModelError>;
}

/// What an external classifier hands back after training.
pub struct ExternalFit {
    pub model: Arc<dyn ExternalModel>,
    pub history: Vec<EpochRecord>,
    pub selected_epoch: usize,
}

pub trait ExternalModel: Send + Sync {
    fn predict(&self, windows: &[&WindowSegment]) -> Result<PredictionBatch, ModelError>;
}

/// Named external classifiers available to [`fit`].
#[derive(Clone, Default)]
pub struct ModelRegistry {
    entries: BTreeMap<String, Arc<dyn ExternalClassifier>>,
}

impl ModelRegistry {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn register(&mut self, id: impl Into<String>, classifier: Arc<dyn ExternalClassifier>) {
        self.entries.insert(id.into(), classifier);
    }

    pub fn get(&self, id: &str) -> Option<&Arc<dyn ExternalClassifier>> {
        self.entries.get(id)
    }

    pub fn ids(&self) -> impl Iterator<Item = &str> {
        self.entries.keys().map(String::as_str)
    }
}

impl fmt::Debug for ModelRegistry {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_list().entries(self.entries.keys()).finish()
    }
}

#[derive(Clone)]
pub enum FittedParameters {
    Majority {
        class: usize,
    },
    Distribution {
        probabilities: Vec<f64>,
        seed: u64,
    },
    Mlp {
        bands: Vec<Band>,
        standardizer: Standardizer,
        mlp: Mlp,
    },
    External(Arc<dyn ExternalModel>),
}

impl fmt::Debug for FittedParameters {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            FittedParameters::Majority { class } => f.debug_struct("Majority").field("class", class).finish(),
            FittedParameters::Distribution {
                probabilities,
                seed,
            } => f
                .debug_struct("Distribution")
                .field("probabilities", probabilities)
                .field("seed", seed)
                .finish(),
            FittedParameters::Mlp { mlp, .. } => f
                .debug_struct("Mlp")
                .field("parameters", &mlp.n_parameters())
                .finish(),
            FittedParameters::External(_) => f.write_str("External"),
        }
    }
}

#[derive(Clone, Debug)]
pub struct TrainedModel {
    pub spec: ClassifierSpec,
    pub n_classes: usize,
    pub parameters: FittedParameters,
    /// Empty for the baselines, which do not train.
    pub history: Vec<EpochRecord>,
    /// Zero-based epoch whose parameters were kept; 0 for the baselines.
    pub selected_epoch: usize,
}

fn class_counts<'a>(
    windows: impl Iterator<Item = &'a &'a WindowSegment>,
    n_classes: usize,
) -> Result<Vec<u64>, ModelError> {
    let mut counts = vec![0u64; n_classes];
    for w in windows {
        let c = w.label.index;
        if c >= n_classes {
            return Err(ModelError::Invalid(format!(
                "label {c} outside {n_classes} classes"
            )));
        }
        counts[c] += 1;
    }
    Ok(counts)
}

fn features_of(windows: &[&WindowSegment], bands: &[Band]) -> Result<Vec<Vec<f64>>, ModelError> {
    windows
        .iter()
        .map(|w| bandpower_features(&w.signal, bands))
        .collect()
}

/// Fit `spec` on labeled windows. The baselines see train and validation
/// together; the MLP trains on `train` and selects its epoch on `val`.
pub fn fit(
    spec: &ClassifierSpec,
    train: &[&WindowSegment],
    val: &[&WindowSegment],
    n_classes: usize,
    training: &TrainingSpec,
    registry: &ModelRegistry,
) -> Result<TrainedModel, ModelError> {
    spec.validate()?;
    training.validate()?;
    if train.is_empty() {
        return Err(ModelError::Empty("no training windows".into()));
    }
    if n_classes == 0 {
        return Err(ModelError::Invalid("n_classes must be at least 1".into()));
    }
    let trained = |parameters, history, selected_epoch| TrainedModel {
        spec: spec.clone(),
        n_classes,
        parameters,
        history,
        selected_epoch,
    };
    match spec {
        ClassifierSpec::MajorityBaseline => {
            let counts = class_counts(train.iter().chain(val), n_classes)?;
            let max = *counts.iter().max().unwrap_or(&0);
            let class = counts.iter().position(|&c| c == max).unwrap_or(0);
            Ok(trained(FittedParameters::Majority { class }, Vec::new(), 0))
        }
        ClassifierSpec::DistributionBaseline => {
            let counts = class_counts(train.iter().chain(val), n_classes)?;
            let total: u64 = counts.iter().sum();
            let probabilities = counts.iter().map(|&c| c as f64 / total as f64).collect();
            Ok(trained(
                FittedParameters::Distribution {
                    probabilities,
                    seed: training.seed,
                },
                Vec::new(),
                0,
            ))
        }
        ClassifierSpec::BandpowerMlp {
            hidden_sizes,
            bands,
        } => {
            if val.is_empty() {
                return Err(ModelError::Empty("no validation windows".into()));
            }
            class_counts(train.iter().chain(val), n_classes)?;
            let raw_train = features_of(train, bands)?;
            let raw_val = features_of(val, bands)?;
            let standardizer = Standardizer::fit(&raw_train);
            let tx: Vec<Vec<f64>> = raw_train.iter().map(|r| standardizer.apply(r)).collect();
            let vx: Vec<Vec<f64>> = raw_val.iter().map(|r| standardizer.apply(r)).collect();
            let ty: Vec<usize> = train.iter().map(|w| w.label.index).collect();
            let vy: Vec<usize> = val.iter().map(|w| w.label.index).collect();
            let fit = train_mlp(&tx, &ty, &vx, &vy, hidden_sizes, n_classes, training)?;
            Ok(trained(
                FittedParameters::Mlp {
                    bands: bands.clone(),
                    standardizer,
                    mlp: fit.mlp,
                },
                fit.history,
                fit.selected_epoch,
            ))
        }
        ClassifierSpec::External { id } => {
            let classifier = registry
                .get(id)
                .ok_or_else(|| ModelError::UnknownExternal(id.clone()))?;
            let fit = classifier.fit(train, val, n_classes, training)?;
            Ok(trained(
                FittedParameters::External(fit.model),
                fit.history,
                fit.selected_epoch,
            ))
        }
    }
}

/// Seed stream used by the distribution baseline at prediction time.
const PREDICTION_STREAM: u64 = 0xD15C;

pub fn predict(model: &TrainedModel, windows: &[&WindowSegment]) -> Result<PredictionBatch, ModelError> {
    let k = model.n_classes;
    let batch = match &model.parameters {
        FittedParameters::Majority { class } => {
            let mut p = vec![0.0; k];
            p[*class] = 1.0;
            PredictionBatch {
                classes: vec![*class; windows.len()],
                probabilities: vec![p; windows.len()],
            }
        }
        FittedParameters::Distribution {
            probabilities,
            seed,
        } => {
            let dist = WeightedIndex::new(probabilities)
                .map_err(|e| ModelError::Invalid(format!("class distribution: {e}")))?;
            let mut r = rng(mix_seed(*seed, PREDICTION_STREAM));
            PredictionBatch {
                classes: (0..windows.len()).map(|_| dist.sample(&mut r)).collect(),
                probabilities: vec![probabilities.clone(); windows.len()],
            }
        }
        FittedParameters::Mlp {
            bands,
            standardizer,
            mlp,
        } => {
            let mut out = PredictionBatch::default();
            for w in windows {
                let raw = bandpower_features(&w.signal, bands)?;
                if raw.len() != mlp.n_inputs() {
                    return Err(ModelError::DimensionMismatch {
                        expected: mlp.n_inputs(),
                        actual: raw.len(),
                    });
                }
                let p = mlp.probabilities(&standardizer.apply(&raw));
                out.classes.push(argmax(&p));
                out.probabilities.push(p);
            }
            out
        }
        FittedParameters::External(m) => {
            let batch = m.predict(windows)?;
            if batch.len() != windows.len() {
                return Err(ModelError::External {
                    id: model.spec.name().to_string(),
                    message: format!("{} predictions for {} windows", batch.len(), windows.len()),
                });
            }
            batch
        }
    };
    Ok(batch)
}

impl TrainedModel {
    /// Write MLP weights and biases, layer by layer, as little-endian f32.
    /// Returns the number of values written.
    pub fn export_parameters(&self, path: &Path) -> Result<usize, ModelError> {
        let FittedParameters::Mlp { mlp, .. } = &self.parameters else {
            return Err(ModelError::Invalid(format!(
                "{} has no exportable parameters",
                self.spec.name()
            )));
        };
        let values = mlp.flat_parameters();
        let io = |source| ModelError::Io {
            path: path.to_path_buf(),
            source,
        };
        let mut file = std::io::BufWriter::new(std::fs::File::create(path).map_err(io)?);
        for v in &values {
            file.write_all(&(*v as f32).to_le_bytes()).map_err(io)?;
        }
        file.flush().map_err(io)?;
        Ok(values.len())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dataset::{SignalBlock, TrialKey};
    use crate::labeling::ClassLabel;
    use std::f64::consts::PI;

    fn labeled(labels: &[usize]) -> Vec<WindowSegment> {
        labels
            .iter()
            .enumerate()
            .map(|(i, &c)| WindowSegment {
                trial: TrialKey::new("s01", "1", format!("t{i}")),
                window_index: 0,
                signal: SignalBlock::new(vec!["a".into()], vec![vec![0.0; 8]], 128.0).unwrap(),
                label: ClassLabel::new(c, format!("c{c}")),
            })
            .collect()
    }

    fn refs(w: &[WindowSegment]) -> Vec<&WindowSegment> {
        w.iter().collect()
    }

    #[test]
    fn majority_predicts_modal_class() {
        let mut labels = vec![1; 70];
        labels.extend(vec![0; 30]);
        let w = labeled(&labels);
        let (train, val) = w.split_at(80);
        let m = fit(
            &ClassifierSpec::MajorityBaseline,
            &refs(train),
            &refs(val),
            2,
            &TrainingSpec::default(),
            &ModelRegistry::new(),
        )
        .unwrap();
        let p = predict(&m, &refs(&w[..5])).unwrap();
        assert_eq!(p.classes, vec![1; 5]);
        assert_eq!(p.probabilities[0], vec![0.0, 1.0]);
    }

    #[test]
    fn majority_tie_goes_to_lowest_class() {
        let w = labeled(&[2, 1, 2, 1]);
        let m = fit(&ClassifierSpec::MajorityBaseline, &refs(&w), &[], 3, &TrainingSpec::default(), &ModelRegistry::new()).unwrap();
        assert!(matches!(m.parameters, FittedParameters::Majority { class: 1 }));
    }

    #[test]
    fn distribution_draw_frequencies() {
        let mut labels = vec![0; 30];
        labels.extend(vec![1; 70]);
        let w = labeled(&labels);
        let spec = TrainingSpec {
            seed: 9,
            ..TrainingSpec::default()
        };
        let m = fit(&ClassifierSpec::DistributionBaseline, &refs(&w), &[], 2, &spec, &ModelRegistry::new()).unwrap();
        let many = labeled(&vec![0; 10_000]);
        let p = predict(&m, &refs(&many)).unwrap();
        let ones = p.classes.iter().filter(|&&c| c == 1).count() as f64 / 10_000.0;
        assert!((ones - 0.7).abs() < 0.02, "{ones}");
        assert_eq!(p.probabilities[0], vec![0.3, 0.7]);
        assert_eq!(predict(&m, &refs(&many)).unwrap(), p);
    }

    #[test]
    fn external_requires_registration() {
        struct Constant;
        struct ConstantModel;
        impl ExternalModel for ConstantModel {
            fn predict(&self, windows: &[&WindowSegment]) -> Result<PredictionBatch, ModelError> {
                Ok(PredictionBatch {
                    classes: vec![0; windows.len()],
                    probabilities: vec![vec![1.0, 0.0]; windows.len()],
                })
            }
        }
        impl ExternalClassifier for Constant {
            fn fit(&self, _: &[&WindowSegment], _: &[&WindowSegment], _: usize, _: &TrainingSpec) -> Result<ExternalFit, ModelError> {
                Ok(ExternalFit {
                    model: Arc::new(ConstantModel),
                    history: Vec::new(),
                    selected_epoch: 0,
                })
            }
        }
        let w = labeled(&[0, 1]);
        let spec = ClassifierSpec::External { id: "const".into() };
        let mut registry = ModelRegistry::new();
        assert!(matches!(
            fit(&spec, &refs(&w), &refs(&w), 2, &TrainingSpec::default(), &registry),
            Err(ModelError::UnknownExternal(_))
        ));
        registry.register("const", Arc::new(Constant));
        let m = fit(&spec, &refs(&w), &refs(&w), 2, &TrainingSpec::default(), &registry).unwrap();
        assert_eq!(predict(&m, &refs(&w)).unwrap().classes, vec![0, 0]);
    }

    fn alpha_window(class: usize, i: usize) -> WindowSegment {
        use rand_distr::Normal;
        let fs = 128.0;
        let amp = if class == 1 { 3.0 } else { 1.0 };
        let noise = Normal::new(0.0, 0.5).unwrap();
        let mut r = rng(i as u64);
        let row: Vec<f64> = (0..256)
            .map(|n| amp * (2.0 * PI * 10.0 * n as f64 / fs + i as f64).sin() + noise.sample(&mut r))
            .collect();
        WindowSegment {
            trial: TrialKey::new("s01", "1", format!("t{i}")),
            window_index: 0,
            signal: SignalBlock::new(vec!["a".into(), "b".into()], vec![row.clone(), row], fs).unwrap(),
            label: ClassLabel::new(class, format!("c{class}")),
        }
    }

    #[test]
    fn mlp_learns_alpha_power_and_exports() {
        let train: Vec<_> = (0..40).map(|i| alpha_window(i % 2, i)).collect();
        let val: Vec<_> = (40..52).map(|i| alpha_window(i % 2, i)).collect();
        let spec = TrainingSpec {
            epochs: 150,
            seed: 3,
            ..TrainingSpec::default()
        };
        let m = fit(&ClassifierSpec::bandpower_mlp(), &refs(&train), &refs(&val), 2, &spec, &ModelRegistry::new()).unwrap();
        assert_eq!(m.history.len(), 150);
        let p = predict(&m, &refs(&val)).unwrap();
        let truth: Vec<usize> = val.iter().map(|w| w.label.index).collect();
        assert_eq!(p.classes, truth);
        for row in &p.probabilities {
            assert!((row.iter().sum::<f64>() - 1.0).abs() < 1e-6);
        }
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("params.f32");
        let n = m.export_parameters(&path).unwrap();
        assert_eq!(n, 10 * 64 + 64 + 64 * 64 + 64 + 64 * 2 + 2);
        assert_eq!(std::fs::metadata(&path).unwrap().len(), 4 * n as u64);
    }

    #[test]
    fn spec_validation_and_serde() {
        let spec: ClassifierSpec = toml::from_str("kind = \"bandpower_mlp\"").unwrap();
        assert_eq!(spec, ClassifierSpec::bandpower_mlp());
        let bad = ClassifierSpec::BandpowerMlp {
            hidden_sizes: vec![0],
            bands: default_bands(),
        };
        assert!(bad.validate().is_err());
        let t: TrainingSpec = toml::from_str("seed = 4").unwrap();
        assert_eq!(t.epochs, 200);
        assert_eq!(t.batch_size, 32);
        let bad = TrainingSpec {
            label_smoothing: 1.0,
            ..TrainingSpec::default()
        };
        assert!(bad.validate().is_err());
    }
}
