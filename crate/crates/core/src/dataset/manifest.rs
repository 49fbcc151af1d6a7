use std::collections::HashSet;
use std::fs;
use std::path::{Component, Path, PathBuf};

use serde::Serialize;

use super::{DatasetError, DatasetManifest, Dimension, TrialKey};

pub const MANIFEST_FILE: &str = "manifest.json";
pub const SCHEMA_VERSION: u32 = 1;

/// Load `manifest.json` (or a directory containing it). Structural invariants
/// are checked here; signal files are not opened.
pub fn load_manifest(path: impl AsRef<Path>) -> Result<DatasetManifest, DatasetError> {
    let mut path = path.as_ref().to_path_buf();
    if path.is_dir() {
        path.push(MANIFEST_FILE);
    }
    let text = fs::read_to_string(&path).map_err(|e| DatasetError::io(&path, e))?;
    let mut manifest: DatasetManifest =
        serde_json::from_str(&text).map_err(|e| DatasetError::Malformed {
            path: path.clone(),
            message: e.to_string(),
        })?;
    manifest.root = path
        .parent()
        .map(Path::to_path_buf)
        .unwrap_or_else(|| PathBuf::from("."));
    check_invariants(&manifest).map_err(|message| DatasetError::Invalid {
        path: path.clone(),
        message,
    })?;
    Ok(manifest)
}

/// Write `manifest.json` into `dir`, creating it if needed.
pub fn write_manifest(manifest: &DatasetManifest, dir: &Path) -> Result<PathBuf, DatasetError> {
    fs::create_dir_all(dir).map_err(|e| DatasetError::io(dir, e))?;
    let path = dir.join(MANIFEST_FILE);
    let mut text = serde_json::to_string_pretty(manifest).map_err(|e| DatasetError::Malformed {
        path: path.clone(),
        message: e.to_string(),
    })?;
    text.push('\n');
    fs::write(&path, text).map_err(|e| DatasetError::io(&path, e))?;
    Ok(path)
}

fn check_relative(path: &str) -> bool {
    let p = Path::new(path);
    !path.is_empty()
        && p.components()
            .all(|c| matches!(c, Component::Normal(_) | Component::CurDir))
}

/// Returns a message naming the first violated invariant.
pub(crate) fn check_invariants(m: &DatasetManifest) -> Result<(), String> {
    if m.schema_version != SCHEMA_VERSION {
        return Err(format!(
            "schema_version {} is not supported (expected {SCHEMA_VERSION})",
            m.schema_version
        ));
    }
    if !(m.sampling_rate_hz.is_finite() && m.sampling_rate_hz > 0.0) {
        return Err(format!(
            "sampling_rate_hz must be positive, got {}",
            m.sampling_rate_hz
        ));
    }
    if m.channels.is_empty() {
        return Err("channels: at least one channel is required".into());
    }
    let mut names = HashSet::new();
    for (i, ch) in m.channels.iter().enumerate() {
        if ch.name.is_empty() {
            return Err(format!("channels[{i}].name is empty"));
        }
        if !names.insert(ch.name.as_str()) {
            return Err(format!("channels[{i}].name: duplicate channel {:?}", ch.name));
        }
    }
    if m.label_schema.has_categorical() {
        match &m.categorical_classes {
            Some(classes) if !classes.is_empty() => {}
            _ => {
                return Err(
                    "categorical_classes must be declared for a categorical label schema".into(),
                )
            }
        }
    }
    if m.subjects.is_empty() {
        return Err("subjects: at least one subject is required".into());
    }
    let mut subject_ids = HashSet::new();
    for (si, subject) in m.subjects.iter().enumerate() {
        let at = format!("subjects[{si}]");
        if subject.subject_id.is_empty() {
            return Err(format!("{at}.subject_id is empty"));
        }
        if !subject_ids.insert(subject.subject_id.as_str()) {
            return Err(format!(
                "{at}.subject_id: duplicate id {:?}",
                subject.subject_id
            ));
        }
        if subject.sessions.is_empty() {
            return Err(format!("{at}.sessions is empty"));
        }
        let mut session_ids = HashSet::new();
        for (ci, session) in subject.sessions.iter().enumerate() {
            let at = format!("{at}.sessions[{ci}]");
            if !session_ids.insert(session.session_id.as_str()) {
                return Err(format!(
                    "{at}.session_id: duplicate id {:?}",
                    session.session_id
                ));
            }
            if session.trials.is_empty() {
                return Err(format!("{at}.trials is empty"));
            }
            let mut trial_ids = HashSet::new();
            for (ti, trial) in session.trials.iter().enumerate() {
                let at = format!("{at}.trials[{ti}]");
                if !trial_ids.insert(trial.trial_id.as_str()) {
                    return Err(format!("{at}.trial_id: duplicate id {:?}", trial.trial_id));
                }
                if trial.n_samples == 0 {
                    return Err(format!("{at}.n_samples must be positive"));
                }
                if !check_relative(&trial.signal_path) {
                    return Err(format!(
                        "{at}.signal_path {:?} does not resolve under the dataset root",
                        trial.signal_path
                    ));
                }
                let label = &trial.label;
                if !(label.scale_min < label.scale_max) {
                    return Err(format!(
                        "{at}.label: scale_min {} must be below scale_max {}",
                        label.scale_min, label.scale_max
                    ));
                }
                if label.dimensional.is_empty() && label.categorical.is_none() {
                    return Err(format!("{at}.label carries neither ratings nor a category"));
                }
                if m.label_schema.has_dimensional() && label.dimensional.is_empty() {
                    return Err(format!("{at}.label: dimensional ratings required"));
                }
                if m.label_schema.has_categorical() && label.categorical.is_none() {
                    return Err(format!("{at}.label: categorical label required"));
                }
            }
        }
    }
    Ok(())
}

#[derive(Clone, Debug, PartialEq, Serialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum FindingKind {
    MissingFile { path: PathBuf },
    WrongLength { path: PathBuf, expected: u64, actual: u64 },
    RatingOutOfScale { dimension: Dimension, rating: f64, scale_min: f64, scale_max: f64 },
    UnknownCategory { category: String },
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Finding {
    pub trial: TrialKey,
    #[serde(flatten)]
    pub kind: FindingKind,
}

impl std::fmt::Display for Finding {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match &self.kind {
            FindingKind::MissingFile { path } => {
                write!(f, "{}: missing signal file {}", self.trial, path.display())
            }
            FindingKind::WrongLength {
                path,
                expected,
                actual,
            } => write!(
                f,
                "{}: {} has {actual} bytes, expected {expected}",
                self.trial,
                path.display()
            ),
            FindingKind::RatingOutOfScale {
                dimension,
                rating,
                scale_min,
                scale_max,
            } => write!(
                f,
                "{}: {dimension} rating {rating} outside scale [{scale_min}, {scale_max}]",
                self.trial
            ),
            FindingKind::UnknownCategory { category } => {
                write!(f, "{}: category {category:?} not declared", self.trial)
            }
        }
    }
}

#[derive(Clone, Debug, Default, PartialEq, Serialize)]
pub struct ValidationReport {
    pub ok: bool,
    pub trials_checked: usize,
    pub findings: Vec<Finding>,
}

/// Check every trial's signal file and label against the manifest.
/// Problems are returned as findings; this never fails.
pub fn validate_manifest(manifest: &DatasetManifest, root: &Path) -> ValidationReport {
    let mut findings = Vec::new();
    let mut trials_checked = 0;
    for (key, trial) in manifest.trials() {
        trials_checked += 1;
        let path = root.join(&trial.signal_path);
        match fs::metadata(&path) {
            Ok(meta) => {
                let expected = manifest.expected_bytes(trial);
                if meta.len() != expected {
                    findings.push(Finding {
                        trial: key.clone(),
                        kind: FindingKind::WrongLength {
                            path: path.clone(),
                            expected,
                            actual: meta.len(),
                        },
                    });
                }
            }
            Err(_) => findings.push(Finding {
                trial: key.clone(),
                kind: FindingKind::MissingFile { path: path.clone() },
            }),
        }
        for (&dimension, &rating) in &trial.label.dimensional {
            if !trial.label.in_scale(rating) {
                findings.push(Finding {
                    trial: key.clone(),
                    kind: FindingKind::RatingOutOfScale {
                        dimension,
                        rating,
                        scale_min: trial.label.scale_min,
                        scale_max: trial.label.scale_max,
                    },
                });
            }
        }
        if let (Some(category), Some(classes)) =
            (&trial.label.categorical, &manifest.categorical_classes)
        {
            if !classes.iter().any(|c| c.eq_ignore_ascii_case(category)) {
                findings.push(Finding {
                    trial: key.clone(),
                    kind: FindingKind::UnknownCategory {
                        category: category.clone(),
                    },
                });
            }
        }
    }
    ValidationReport {
        ok: findings.is_empty(),
        trials_checked,
        findings,
    }
}
