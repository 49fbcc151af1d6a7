use std::collections::BTreeMap;

use serde::Serialize;

use super::{DatasetError, DatasetManifest};
use crate::labeling::{ClassDistribution, GroundTruthScheme};

/// Dataset characteristics in the shape of a dataset comparison table.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct SummaryStats {
    pub dataset_name: String,
    pub n_subjects: usize,
    pub trials_per_subject: BTreeMap<String, usize>,
    pub n_channels: usize,
    pub sampling_rate_hz: f64,
    pub total_trial_seconds: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub class_names: Option<Vec<String>>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub class_distribution: Option<ClassDistribution>,
}

impl SummaryStats {
    /// Trial count when every subject has the same number, else `None`.
    pub fn uniform_trials_per_subject(&self) -> Option<usize> {
        let mut counts = self.trials_per_subject.values();
        let first = *counts.next()?;
        counts.all(|&c| c == first).then_some(first)
    }
}

impl std::fmt::Display for SummaryStats {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        writeln!(f, "dataset        {}", self.dataset_name)?;
        writeln!(f, "subjects       {}", self.n_subjects)?;
        match self.uniform_trials_per_subject() {
            Some(n) => writeln!(f, "trials/subject {n}")?,
            None => {
                let min = self.trials_per_subject.values().min().unwrap_or(&0);
                let max = self.trials_per_subject.values().max().unwrap_or(&0);
                writeln!(f, "trials/subject {min}..{max}")?
            }
        }
        writeln!(f, "channels       {}", self.n_channels)?;
        writeln!(f, "sampling rate  {} Hz", self.sampling_rate_hz)?;
        writeln!(f, "total seconds  {:.1}", self.total_trial_seconds)?;
        if let (Some(names), Some(dist)) = (&self.class_names, &self.class_distribution) {
            for ((name, count), p) in names.iter().zip(&dist.counts).zip(&dist.proportions) {
                writeln!(f, "class {name:<8} {count:>6} ({:.1}%)", 100.0 * p)?;
            }
        }
        Ok(())
    }
}

/// Count subjects, trials and trial-seconds, and optionally the class
/// distribution under `scheme`.
pub fn dataset_summary(
    manifest: &DatasetManifest,
    scheme: Option<&GroundTruthScheme>,
) -> Result<SummaryStats, DatasetError> {
    let trials_per_subject = manifest
        .subjects
        .iter()
        .map(|s| {
            let n = s.sessions.iter().map(|c| c.trials.len()).sum();
            (s.subject_id.clone(), n)
        })
        .collect();
    let total_samples: usize = manifest.trials().map(|(_, t)| t.n_samples).sum();
    let class_distribution = match scheme {
        Some(scheme) => {
            let indices = manifest
                .trials()
                .map(|(_, t)| scheme.label(&t.label).map(|l| l.index))
                .collect::<Result<Vec<_>, _>>()?;
            Some(ClassDistribution::from_indices(&indices, scheme.n_classes())?)
        }
        None => None,
    };
    Ok(SummaryStats {
        dataset_name: manifest.dataset_name.clone(),
        n_subjects: manifest.subjects.len(),
        trials_per_subject,
        n_channels: manifest.channels.len(),
        sampling_rate_hz: manifest.sampling_rate_hz,
        total_trial_seconds: total_samples as f64 / manifest.sampling_rate_hz,
        class_names: scheme.map(|s| s.class_names().to_vec()),
        class_distribution,
    })
}
