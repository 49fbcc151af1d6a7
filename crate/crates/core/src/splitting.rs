//! Cross-validation fold planning.
//!
//! Folds are planned over subjects, sessions or trials before any window
//! exists; windows are then routed to the side their parent unit landed on.
//! Overlapping windows of one trial therefore never straddle a split.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;

use rand::seq::SliceRandom;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::dataset::{DatasetManifest, TrialKey};
use crate::seed::rng;
use crate::transform::WindowSegment;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum SplitError {
    #[error("{scheme} needs {need}, found {found}")]
    InsufficientUnits {
        scheme: String,
        need: String,
        found: String,
    },
    #[error("unknown subject id {0:?} in fixed split")]
    UnknownId(String),
    #[error("invalid split: {0}")]
    Invalid(String),
    #[error("window {trial} #{window_index} belongs to neither side of fold {fold_index}")]
    Unrouted {
        trial: TrialKey,
        window_index: usize,
        fold_index: usize,
    },
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum SplitScheme {
    Loso,
    Lkso { k: usize },
    Loto,
    Lkto { k: usize },
    LeaveOneSessionOut,
    Fixed {
        train_ids: Vec<String>,
        test_ids: Vec<String>,
    },
}

impl fmt::Display for SplitScheme {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            SplitScheme::Loso => f.write_str("loso"),
            SplitScheme::Lkso { k } => write!(f, "lkso(k={k})"),
            SplitScheme::Loto => f.write_str("loto"),
            SplitScheme::Lkto { k } => write!(f, "lkto(k={k})"),
            SplitScheme::LeaveOneSessionOut => f.write_str("leave_one_session_out"),
            SplitScheme::Fixed { .. } => f.write_str("fixed"),
        }
    }
}

impl SplitScheme {
    pub fn unit_kind(&self) -> UnitKind {
        match self {
            SplitScheme::Loso | SplitScheme::Lkso { .. } | SplitScheme::Fixed { .. } => {
                UnitKind::Subject
            }
            SplitScheme::Loto | SplitScheme::Lkto { .. } => UnitKind::Trial,
            SplitScheme::LeaveOneSessionOut => UnitKind::Session,
        }
    }

    /// Whether every unit in scope is tested exactly once.
    pub fn is_exhaustive(&self) -> bool {
        !matches!(self, SplitScheme::Fixed { .. })
    }

    pub fn is_subject_dependent(&self) -> bool {
        matches!(self.unit_kind(), UnitKind::Trial | UnitKind::Session)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum UnitKind {
    Subject,
    Session,
    Trial,
}

/// A subject, a session of a subject, or a single trial.
#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct Unit {
    pub subject_id: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub session_id: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub trial_id: Option<String>,
}

impl Unit {
    pub fn subject(id: impl Into<String>) -> Self {
        Self {
            subject_id: id.into(),
            session_id: None,
            trial_id: None,
        }
    }

    pub fn session(subject: impl Into<String>, session: impl Into<String>) -> Self {
        Self {
            subject_id: subject.into(),
            session_id: Some(session.into()),
            trial_id: None,
        }
    }

    pub fn trial(key: &TrialKey) -> Self {
        Self {
            subject_id: key.subject_id.clone(),
            session_id: Some(key.session_id.clone()),
            trial_id: Some(key.trial_id.clone()),
        }
    }

    pub fn contains(&self, key: &TrialKey) -> bool {
        self.subject_id == key.subject_id
            && self.session_id.as_ref().is_none_or(|s| *s == key.session_id)
            && self.trial_id.as_ref().is_none_or(|t| *t == key.trial_id)
    }
}

impl fmt::Display for Unit {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.subject_id)?;
        if let Some(s) = &self.session_id {
            write!(f, "/{s}")?;
        }
        if let Some(t) = &self.trial_id {
            write!(f, "/{t}")?;
        }
        Ok(())
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct FoldPlan {
    pub fold_index: usize,
    pub scheme: SplitScheme,
    /// Subject a subject-dependent fold belongs to.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub scope: Option<String>,
    pub train_units: BTreeSet<Unit>,
    pub test_units: BTreeSet<Unit>,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Side {
    Train,
    Test,
}

impl FoldPlan {
    pub fn side_of(&self, key: &TrialKey) -> Option<Side> {
        if self.test_units.iter().any(|u| u.contains(key)) {
            Some(Side::Test)
        } else if self.train_units.iter().any(|u| u.contains(key)) {
            Some(Side::Train)
        } else {
            None
        }
    }

    /// Trials of the manifest on the given side, in manifest order.
    pub fn trials_on(&self, manifest: &DatasetManifest, side: Side) -> Vec<TrialKey> {
        manifest
            .trials()
            .filter(|(key, _)| self.side_of(key) == Some(side))
            .map(|(key, _)| key)
            .collect()
    }
}

fn insufficient(scheme: &SplitScheme, need: impl Into<String>, found: impl Into<String>) -> SplitError {
    SplitError::InsufficientUnits {
        scheme: scheme.to_string(),
        need: need.into(),
        found: found.into(),
    }
}

fn check_k(scheme: &SplitScheme, k: usize, n: usize, what: &str) -> Result<(), SplitError> {
    if k == 0 {
        return Err(SplitError::Invalid(format!("{scheme}: k must be at least 1")));
    }
    if k >= n {
        return Err(insufficient(
            scheme,
            format!("more than {k} {what}"),
            format!("{n}"),
        ));
    }
    Ok(())
}

/// Leave-`k`-out folds over `units` (already ordered): chunk and hold out
/// each chunk in turn.
fn chunked_folds(
    units: &[Unit],
    k: usize,
    scheme: &SplitScheme,
    scope: Option<&str>,
    first_index: usize,
) -> Vec<FoldPlan> {
    units
        .chunks(k)
        .enumerate()
        .map(|(i, chunk)| {
            let test_units: BTreeSet<Unit> = chunk.iter().cloned().collect();
            FoldPlan {
                fold_index: first_index + i,
                scheme: scheme.clone(),
                scope: scope.map(str::to_string),
                train_units: units
                    .iter()
                    .filter(|u| !test_units.contains(*u))
                    .cloned()
                    .collect(),
                test_units,
            }
        })
        .collect()
}

pub fn plan_folds(manifest: &DatasetManifest, scheme: &SplitScheme) -> Result<Vec<FoldPlan>, SplitError> {
    let subjects: Vec<Unit> = manifest
        .subjects
        .iter()
        .map(|s| Unit::subject(&s.subject_id))
        .collect();
    match scheme {
        SplitScheme::Loso | SplitScheme::Lkso { .. } => {
            if subjects.len() < 2 {
                return Err(insufficient(scheme, "at least 2 subjects", subjects.len().to_string()));
            }
            let (k, ordered) = match scheme {
                SplitScheme::Lkso { k } => {
                    check_k(scheme, *k, subjects.len(), "subjects")?;
                    let mut sorted = subjects.clone();
                    sorted.sort();
                    (*k, sorted)
                }
                _ => (1, subjects),
            };
            Ok(chunked_folds(&ordered, k, scheme, None, 0))
        }
        SplitScheme::Loto | SplitScheme::Lkto { .. } | SplitScheme::LeaveOneSessionOut => {
            let mut folds = Vec::new();
            for subject in &manifest.subjects {
                let sid = subject.subject_id.as_str();
                let mut units: Vec<Unit> = match scheme {
                    SplitScheme::LeaveOneSessionOut => subject
                        .sessions
                        .iter()
                        .map(|c| Unit::session(sid, &c.session_id))
                        .collect(),
                    _ => subject
                        .sessions
                        .iter()
                        .flat_map(|c| {
                            c.trials
                                .iter()
                                .map(move |t| Unit::trial(&TrialKey::new(sid, &c.session_id, &t.trial_id)))
                        })
                        .collect(),
                };
                let what = if scheme.unit_kind() == UnitKind::Session {
                    "sessions"
                } else {
                    "trials"
                };
                if units.len() < 2 {
                    return Err(insufficient(
                        scheme,
                        format!("at least 2 {what} per subject"),
                        format!("{} in subject {sid}", units.len()),
                    ));
                }
                let k = match scheme {
                    SplitScheme::Lkto { k } => {
                        check_k(scheme, *k, units.len(), what)?;
                        units.sort();
                        *k
                    }
                    _ => 1,
                };
                let start = folds.len();
                folds.extend(chunked_folds(&units, k, scheme, Some(sid), start));
            }
            Ok(folds)
        }
        SplitScheme::Fixed {
            train_ids,
            test_ids,
        } => {
            if train_ids.is_empty() || test_ids.is_empty() {
                return Err(SplitError::Invalid(
                    "fixed split needs nonempty train and test sets".into(),
                ));
            }
            for id in train_ids.iter().chain(test_ids) {
                if manifest.subject(id).is_none() {
                    return Err(SplitError::UnknownId(id.clone()));
                }
            }
            if let Some(id) = train_ids.iter().find(|id| test_ids.contains(id)) {
                return Err(SplitError::Invalid(format!(
                    "subject {id:?} is on both sides of the fixed split"
                )));
            }
            Ok(vec![FoldPlan {
                fold_index: 0,
                scheme: scheme.clone(),
                scope: None,
                train_units: train_ids.iter().map(Unit::subject).collect(),
                test_units: test_ids.iter().map(Unit::subject).collect(),
            }])
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TrainValSplit {
    pub train_units: BTreeSet<Unit>,
    pub val_units: BTreeSet<Unit>,
    pub ratio: f64,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub warnings: Vec<String>,
}

/// Class-balanced train/validation split. Per class, `floor(count·ratio)`
/// units (chosen by a seeded shuffle) go to train and the rest to
/// validation; at least one unit stays in validation when a class has two or
/// more, and a lone unit goes to train with a warning.
pub fn train_val_split(
    units: &[(Unit, usize)],
    n_classes: usize,
    ratio: f64,
    seed: u64,
) -> Result<TrainValSplit, SplitError> {
    if !(ratio > 0.0 && ratio < 1.0) {
        return Err(SplitError::Invalid(format!(
            "train/validation ratio must be in (0, 1), got {ratio}"
        )));
    }
    let mut by_class: BTreeMap<usize, Vec<Unit>> = BTreeMap::new();
    for (unit, class) in units {
        if *class >= n_classes {
            return Err(SplitError::Invalid(format!(
                "unit {unit} has class {class} but only {n_classes} classes exist"
            )));
        }
        by_class.entry(*class).or_default().push(unit.clone());
    }
    let mut rng = rng(seed);
    let mut split = TrainValSplit {
        train_units: BTreeSet::new(),
        val_units: BTreeSet::new(),
        ratio,
        warnings: Vec::new(),
    };
    for class in 0..n_classes {
        let Some(members) = by_class.get_mut(&class) else {
            split
                .warnings
                .push(format!("class {class} has no units; absent from train and validation"));
            continue;
        };
        members.sort();
        members.dedup();
        members.shuffle(&mut rng);
        let count = members.len();
        let n_train = if count == 1 {
            split.warnings.push(format!(
                "class {class} has a single unit; it goes to train and validation has none"
            ));
            1
        } else {
            ((count as f64 * ratio + 1e-9).floor() as usize).min(count - 1)
        };
        split.train_units.extend(members[..n_train].iter().cloned());
        split.val_units.extend(members[n_train..].iter().cloned());
    }
    for w in &split.warnings {
        log::warn!("{w}");
    }
    Ok(split)
}

/// Route windows to the train or test side of `fold` by their parent trial.
pub fn materialize_fold<'a>(
    fold: &FoldPlan,
    windows: impl IntoIterator<Item = &'a WindowSegment>,
) -> Result<(Vec<&'a WindowSegment>, Vec<&'a WindowSegment>), SplitError> {
    let mut train = Vec::new();
    let mut test = Vec::new();
    for w in windows {
        match fold.side_of(&w.trial) {
            Some(Side::Train) => train.push(w),
            Some(Side::Test) => test.push(w),
            None => {
                return Err(SplitError::Unrouted {
                    trial: w.trial.clone(),
                    window_index: w.window_index,
                    fold_index: fold.fold_index,
                })
            }
        }
    }
    Ok((train, test))
}

#[derive(Clone, Debug, Default, PartialEq, Serialize)]
pub struct VerificationReport {
    pub ok: bool,
    pub folds_checked: usize,
    pub violations: Vec<String>,
}

/// Check per-fold disjointness and, for exhaustive schemes, that every unit
/// of each scope is tested exactly once.
pub fn verify_disjoint(folds: &[FoldPlan]) -> VerificationReport {
    let mut violations = Vec::new();
    // Per scope: all units seen, how often each was tested, exhaustiveness.
    type ScopeTally = (BTreeSet<Unit>, BTreeMap<Unit, usize>, bool);
    let mut scopes: BTreeMap<Option<String>, ScopeTally> = BTreeMap::new();
    for fold in folds {
        if fold.test_units.is_empty() {
            violations.push(format!("fold {}: empty test set", fold.fold_index));
        }
        for u in fold.train_units.intersection(&fold.test_units) {
            violations.push(format!("fold {}: unit {u} on both sides", fold.fold_index));
        }
        let entry = scopes.entry(fold.scope.clone()).or_default();
        entry.0.extend(fold.train_units.iter().cloned());
        entry.0.extend(fold.test_units.iter().cloned());
        for u in &fold.test_units {
            *entry.1.entry(u.clone()).or_default() += 1;
        }
        entry.2 |= fold.scheme.is_exhaustive();
    }
    for (scope, (all, tested, exhaustive)) in &scopes {
        if !exhaustive {
            continue;
        }
        let label = scope.as_deref().unwrap_or("all subjects");
        for u in all {
            match tested.get(u).copied().unwrap_or(0) {
                1 => {}
                0 => violations.push(format!("{label}: unit {u} never tested")),
                n => violations.push(format!("{label}: unit {u} tested {n} times")),
            }
        }
    }
    VerificationReport {
        ok: violations.is_empty(),
        folds_checked: folds.len(),
        violations,
    }
}
