//! Canonical on-disk dataset format.
//!
//! A dataset is a directory holding `manifest.json` plus one raw signal file
//! per trial at `<subject_id>/<session_id>/<trial_id>.f32raw`. Signal files
//! are little-endian `f32`, channel-major, in microvolts. Labels live only in
//! the manifest so that labeling and splitting never touch signal data.
//!
//! Native dataset formats (BDF, EDF, MAT, ...) are handled by external
//! converters that emit this layout; see the README for the per-dataset notes.

mod manifest;
mod signal;
mod summary;
mod synthetic;

use std::collections::BTreeMap;
use std::fmt;
use std::path::PathBuf;

use serde::{Deserialize, Serialize};
use thiserror::Error;

pub use manifest::{
    load_manifest, validate_manifest, write_manifest, Finding, FindingKind, ValidationReport,
    MANIFEST_FILE, SCHEMA_VERSION,
};
pub use signal::{read_signal_file, read_trial_signal, write_signal_file, SignalBlock, SIGNAL_EXT};
pub use summary::{dataset_summary, SummaryStats};
pub use synthetic::{generate_synthetic, SyntheticSpec};

#[derive(Debug, Error)]
pub enum DatasetError {
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("{path}: malformed manifest: {message}")]
    Malformed { path: PathBuf, message: String },
    #[error("{path}: invalid manifest: {message}")]
    Invalid { path: PathBuf, message: String },
    #[error("unknown {kind} id {id:?}")]
    UnknownId { kind: &'static str, id: String },
    #[error("{path}: expected {expected} bytes, found {actual}")]
    LengthMismatch {
        path: PathBuf,
        expected: u64,
        actual: u64,
    },
    #[error("invalid signal: {0}")]
    InvalidSignal(String),
    #[error("precondition failed: {0}")]
    Precondition(String),
    #[error(transparent)]
    Label(#[from] crate::labeling::LabelError),
}

impl DatasetError {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        DatasetError::Io {
            path: path.into(),
            source,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ChannelKind {
    Eeg,
    Peripheral,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct ChannelSpec {
    pub name: String,
    pub kind: ChannelKind,
}

impl ChannelSpec {
    pub fn eeg(name: impl Into<String>) -> Self {
        Self {
            name: name.into(),
            kind: ChannelKind::Eeg,
        }
    }

    pub fn peripheral(name: impl Into<String>) -> Self {
        Self {
            name: name.into(),
            kind: ChannelKind::Peripheral,
        }
    }
}

/// Self-assessment dimensions found in the supported datasets.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Dimension {
    Valence,
    Arousal,
    Dominance,
    Liking,
    Familiarity,
    Predictability,
}

impl fmt::Display for Dimension {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = match self {
            Dimension::Valence => "valence",
            Dimension::Arousal => "arousal",
            Dimension::Dominance => "dominance",
            Dimension::Liking => "liking",
            Dimension::Familiarity => "familiarity",
            Dimension::Predictability => "predictability",
        };
        f.write_str(s)
    }
}

/// Raw ground truth attached to one trial.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct LabelRecord {
    #[serde(default, skip_serializing_if = "BTreeMap::is_empty")]
    pub dimensional: BTreeMap<Dimension, f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub categorical: Option<String>,
    pub scale_min: f64,
    pub scale_max: f64,
}

impl LabelRecord {
    pub fn in_scale(&self, rating: f64) -> bool {
        rating >= self.scale_min && rating <= self.scale_max
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TrialRecord {
    pub trial_id: String,
    /// Path relative to the dataset root.
    pub signal_path: String,
    pub n_samples: usize,
    pub label: LabelRecord,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SessionRecord {
    pub session_id: String,
    pub trials: Vec<TrialRecord>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SubjectRecord {
    pub subject_id: String,
    pub sessions: Vec<SessionRecord>,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum LabelSchema {
    Dimensional,
    Categorical,
    Both,
}

impl LabelSchema {
    pub fn has_dimensional(self) -> bool {
        matches!(self, LabelSchema::Dimensional | LabelSchema::Both)
    }

    pub fn has_categorical(self) -> bool {
        matches!(self, LabelSchema::Categorical | LabelSchema::Both)
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DatasetManifest {
    pub schema_version: u32,
    pub dataset_name: String,
    pub sampling_rate_hz: f64,
    pub channels: Vec<ChannelSpec>,
    pub label_schema: LabelSchema,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub categorical_classes: Option<Vec<String>>,
    pub subjects: Vec<SubjectRecord>,
    /// Directory the manifest was loaded from; signal paths resolve under it.
    #[serde(skip)]
    pub root: PathBuf,
}

/// Identity of one trial within a dataset.
#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct TrialKey {
    pub subject_id: String,
    pub session_id: String,
    pub trial_id: String,
}

impl TrialKey {
    pub fn new(
        subject_id: impl Into<String>,
        session_id: impl Into<String>,
        trial_id: impl Into<String>,
    ) -> Self {
        Self {
            subject_id: subject_id.into(),
            session_id: session_id.into(),
            trial_id: trial_id.into(),
        }
    }
}

impl fmt::Display for TrialKey {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}/{}/{}", self.subject_id, self.session_id, self.trial_id)
    }
}

impl DatasetManifest {
    pub fn channel_names(&self) -> Vec<String> {
        self.channels.iter().map(|c| c.name.clone()).collect()
    }

    pub fn n_trials(&self) -> usize {
        self.trials().count()
    }

    /// All trials in manifest order.
    pub fn trials(&self) -> impl Iterator<Item = (TrialKey, &TrialRecord)> + '_ {
        self.subjects.iter().flat_map(|subject| {
            subject.sessions.iter().flat_map(move |session| {
                session.trials.iter().map(move |trial| {
                    (
                        TrialKey::new(&subject.subject_id, &session.session_id, &trial.trial_id),
                        trial,
                    )
                })
            })
        })
    }

    pub fn subject(&self, subject_id: &str) -> Option<&SubjectRecord> {
        self.subjects.iter().find(|s| s.subject_id == subject_id)
    }

    pub fn trial(&self, key: &TrialKey) -> Result<&TrialRecord, DatasetError> {
        let subject = self.subject(&key.subject_id).ok_or_else(|| DatasetError::UnknownId {
            kind: "subject",
            id: key.subject_id.clone(),
        })?;
        let session = subject
            .sessions
            .iter()
            .find(|s| s.session_id == key.session_id)
            .ok_or_else(|| DatasetError::UnknownId {
                kind: "session",
                id: key.session_id.clone(),
            })?;
        session
            .trials
            .iter()
            .find(|t| t.trial_id == key.trial_id)
            .ok_or_else(|| DatasetError::UnknownId {
                kind: "trial",
                id: key.trial_id.clone(),
            })
    }

    /// Conventional relative signal path for a trial.
    pub fn default_signal_path(key: &TrialKey) -> String {
        format!(
            "{}/{}/{}.{}",
            key.subject_id, key.session_id, key.trial_id, SIGNAL_EXT
        )
    }

    /// Expected byte length of a trial's signal file.
    pub fn expected_bytes(&self, trial: &TrialRecord) -> u64 {
        (self.channels.len() as u64) * (trial.n_samples as u64) * 4
    }
}
