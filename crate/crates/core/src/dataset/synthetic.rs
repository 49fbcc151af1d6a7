use std::collections::BTreeMap;
use std::f64::consts::PI;
use std::path::Path;

use rand::Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use super::{
    write_manifest, write_signal_file, ChannelSpec, DatasetError, DatasetManifest, Dimension,
    LabelRecord, LabelSchema, SessionRecord, SignalBlock, SubjectRecord, TrialKey, TrialRecord,
    SCHEMA_VERSION,
};
use crate::seed::{mix_seed, rng};

/// Standard 10-20 montage names in the order used by 32-channel recordings.
const MONTAGE: [&str; 32] = [
    "Fp1", "AF3", "F3", "F7", "FC5", "FC1", "C3", "T7", "CP5", "CP1", "P3", "P7", "PO3", "O1",
    "Oz", "Pz", "Fp2", "AF4", "Fz", "F4", "F8", "FC6", "FC2", "Cz", "C4", "T8", "CP6", "CP2",
    "P4", "P8", "PO4", "O2",
];

const ALPHA_LO_HZ: f64 = 8.0;
const ALPHA_HI_HZ: f64 = 13.0;
const SCALE_MIN: f64 = 1.0;
const SCALE_MAX: f64 = 9.0;

/// Parameters of a synthetic dataset. Each trial's class is drawn uniformly;
/// its channels carry white noise plus an alpha-band sinusoid whose amplitude
/// is `alpha_amplitude * class_effect[class]`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SyntheticSpec {
    #[serde(default = "default_name")]
    pub dataset_name: String,
    pub n_subjects: usize,
    #[serde(default = "one")]
    pub n_sessions_per_subject: usize,
    pub n_trials_per_session: usize,
    pub n_channels: usize,
    pub trial_length_s: f64,
    pub sampling_rate_hz: f64,
    #[serde(default = "default_schema")]
    pub label_schema: LabelSchema,
    /// Alpha amplitude multiplier per class; its length is the class count.
    pub class_effect: Vec<f64>,
    #[serde(default = "default_alpha")]
    pub alpha_amplitude: f64,
    pub noise_sd: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub class_names: Option<Vec<String>>,
    pub seed: u64,
}

fn default_name() -> String {
    "synthetic".into()
}
fn one() -> usize {
    1
}
fn default_schema() -> LabelSchema {
    LabelSchema::Dimensional
}
fn default_alpha() -> f64 {
    1.0
}

impl SyntheticSpec {
    /// A two-class alpha-effect dataset with the given shape.
    pub fn alpha_effect(
        n_subjects: usize,
        n_trials_per_session: usize,
        n_channels: usize,
        trial_length_s: f64,
        sampling_rate_hz: f64,
        seed: u64,
    ) -> Self {
        Self {
            dataset_name: default_name(),
            n_subjects,
            n_sessions_per_subject: 1,
            n_trials_per_session,
            n_channels,
            trial_length_s,
            sampling_rate_hz,
            label_schema: LabelSchema::Dimensional,
            class_effect: vec![1.0, 3.0],
            alpha_amplitude: 1.0,
            noise_sd: 1.0,
            class_names: None,
            seed,
        }
    }

    pub fn n_classes(&self) -> usize {
        self.class_effect.len()
    }

    pub fn n_samples(&self) -> usize {
        (self.trial_length_s * self.sampling_rate_hz).round() as usize
    }

    pub fn channel_names(&self) -> Vec<String> {
        (0..self.n_channels)
            .map(|i| match MONTAGE.get(i) {
                Some(name) => (*name).to_string(),
                None => format!("E{}", i + 1),
            })
            .collect()
    }

    fn class_names_or_default(&self) -> Vec<String> {
        self.class_names.clone().unwrap_or_else(|| {
            (0..self.n_classes()).map(|c| format!("class_{c}")).collect()
        })
    }

    pub fn check(&self) -> Result<(), DatasetError> {
        let fail = |m: String| Err(DatasetError::Precondition(m));
        for (name, v) in [
            ("n_subjects", self.n_subjects),
            ("n_sessions_per_subject", self.n_sessions_per_subject),
            ("n_trials_per_session", self.n_trials_per_session),
            ("n_channels", self.n_channels),
        ] {
            if v == 0 {
                return fail(format!("{name} must be at least 1"));
            }
        }
        if !(self.sampling_rate_hz > 0.0 && self.trial_length_s > 0.0) {
            return fail("sampling_rate_hz and trial_length_s must be positive".into());
        }
        if self.n_samples() == 0 {
            return fail("trial is shorter than one sample".into());
        }
        if self.class_effect.is_empty() || self.class_effect.iter().any(|&e| !(e > 0.0)) {
            return fail("class_effect needs at least one positive multiplier per class".into());
        }
        if !(self.noise_sd >= 0.0 && self.alpha_amplitude >= 0.0) {
            return fail("noise_sd and alpha_amplitude must be non-negative".into());
        }
        if self.label_schema.has_dimensional() && !matches!(self.n_classes(), 2 | 4) {
            return fail(format!(
                "dimensional labels encode 2 (binary) or 4 (quadrant) classes, got {}",
                self.n_classes()
            ));
        }
        if let Some(names) = &self.class_names {
            if names.len() != self.n_classes() {
                return fail("class_names must match class_effect in length".into());
            }
        }
        Ok(())
    }
}

/// Ratings that binarize (at 4.5 on a 1-9 scale) to the given bit.
fn rating_for(high: bool, rng: &mut impl Rng) -> f64 {
    if high {
        rng.random_range(5..=9) as f64
    } else {
        rng.random_range(1..=4) as f64
    }
}

fn label_for(spec: &SyntheticSpec, class: usize, rng: &mut impl Rng) -> LabelRecord {
    let mut dimensional = BTreeMap::new();
    if spec.label_schema.has_dimensional() {
        if spec.n_classes() == 2 {
            dimensional.insert(Dimension::Valence, rating_for(class == 1, rng));
            dimensional.insert(Dimension::Arousal, rng.random_range(1..=9) as f64);
        } else {
            dimensional.insert(Dimension::Valence, rating_for(class & 1 == 1, rng));
            dimensional.insert(Dimension::Arousal, rating_for(class & 2 == 2, rng));
        }
    }
    let categorical = spec
        .label_schema
        .has_categorical()
        .then(|| spec.class_names_or_default()[class].clone());
    LabelRecord {
        dimensional,
        categorical,
        scale_min: SCALE_MIN,
        scale_max: SCALE_MAX,
    }
}

fn trial_signal(spec: &SyntheticSpec, class: usize, seed: u64) -> SignalBlock {
    let mut rng = rng(seed);
    let fs = spec.sampling_rate_hz;
    let n = spec.n_samples();
    let amplitude = spec.alpha_amplitude * spec.class_effect[class];
    // Keep the tone clear of the band edges so its leakage stays in-band.
    let freq = rng.random_range((ALPHA_LO_HZ + 1.0)..(ALPHA_HI_HZ - 2.0));
    let noise = Normal::new(0.0, spec.noise_sd).expect("noise_sd checked non-negative");
    let data = (0..spec.n_channels)
        .map(|_| {
            let phase = rng.random_range(0.0..2.0 * PI);
            (0..n)
                .map(|i| {
                    let t = i as f64 / fs;
                    amplitude * (2.0 * PI * freq * t + phase).sin() + noise.sample(&mut rng)
                })
                .collect()
        })
        .collect();
    SignalBlock::new(spec.channel_names(), data, fs).expect("rows built with equal length")
}

/// Write a complete synthetic dataset under `out` and return its manifest.
/// Output bytes are a pure function of `spec`.
pub fn generate_synthetic(spec: &SyntheticSpec, out: &Path) -> Result<DatasetManifest, DatasetError> {
    spec.check()?;
    std::fs::create_dir_all(out).map_err(|e| DatasetError::io(out, e))?;
    let mut label_rng = rng(mix_seed(spec.seed, u64::MAX));
    let mut trial_index = 0u64;
    let mut subjects = Vec::with_capacity(spec.n_subjects);
    for s in 0..spec.n_subjects {
        let subject_id = format!("s{:02}", s + 1);
        let mut sessions = Vec::with_capacity(spec.n_sessions_per_subject);
        for c in 0..spec.n_sessions_per_subject {
            let session_id = format!("{}", c + 1);
            let mut trials = Vec::with_capacity(spec.n_trials_per_session);
            for t in 0..spec.n_trials_per_session {
                let key = TrialKey::new(&subject_id, &session_id, format!("t{:02}", t + 1));
                let class = label_rng.random_range(0..spec.n_classes());
                let label = label_for(spec, class, &mut label_rng);
                let signal = trial_signal(spec, class, mix_seed(spec.seed, trial_index));
                trial_index += 1;
                let signal_path = DatasetManifest::default_signal_path(&key);
                write_signal_file(&out.join(&signal_path), &signal)?;
                trials.push(TrialRecord {
                    trial_id: key.trial_id,
                    signal_path,
                    n_samples: signal.n_samples(),
                    label,
                });
            }
            sessions.push(SessionRecord { session_id, trials });
        }
        subjects.push(SubjectRecord {
            subject_id,
            sessions,
        });
    }
    let manifest = DatasetManifest {
        schema_version: SCHEMA_VERSION,
        dataset_name: spec.dataset_name.clone(),
        sampling_rate_hz: spec.sampling_rate_hz,
        channels: spec.channel_names().into_iter().map(ChannelSpec::eeg).collect(),
        label_schema: spec.label_schema,
        categorical_classes: spec
            .label_schema
            .has_categorical()
            .then(|| spec.class_names_or_default()),
        subjects,
        root: out.to_path_buf(),
    };
    write_manifest(&manifest, out)?;
    Ok(manifest)
}
