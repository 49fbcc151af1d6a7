//! Confusion-matrix metrics and cross-fold aggregation.
//!
//! Zero-denominator conventions: precision, recall and F1 of a class with an
//! empty denominator are 0; MCC and kappa are 0 when their denominators
//! vanish. Cross-fold spread is the sample standard deviation (n − 1).

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum MetricError {
    #[error("{truth} true labels but {pred} predictions")]
    LengthMismatch { truth: usize, pred: usize },
    #[error("label {label} out of range for {n_classes} classes")]
    LabelOutOfRange { label: usize, n_classes: usize },
    #[error("no samples to evaluate")]
    Empty,
    #[error("no fold reports to aggregate")]
    NoReports,
}

/// `counts[i][j]`: samples of true class `i` predicted as `j`.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct ConfusionMatrix {
    pub n_classes: usize,
    pub counts: Vec<Vec<u64>>,
}

impl ConfusionMatrix {
    pub fn from_counts(counts: Vec<Vec<u64>>) -> Self {
        Self {
            n_classes: counts.len(),
            counts,
        }
    }

    pub fn total(&self) -> u64 {
        self.counts.iter().flatten().sum()
    }

    pub fn trace(&self) -> u64 {
        (0..self.n_classes).map(|i| self.counts[i][i]).sum()
    }

    /// True count per class.
    pub fn row_sums(&self) -> Vec<u64> {
        self.counts.iter().map(|r| r.iter().sum()).collect()
    }

    /// Predicted count per class.
    pub fn col_sums(&self) -> Vec<u64> {
        (0..self.n_classes)
            .map(|j| self.counts.iter().map(|r| r[j]).sum())
            .collect()
    }

    fn nonempty(&self) -> Result<f64, MetricError> {
        match self.total() {
            0 => Err(MetricError::Empty),
            t => Ok(t as f64),
        }
    }
}

pub fn confusion_matrix(
    y_true: &[usize],
    y_pred: &[usize],
    n_classes: usize,
) -> Result<ConfusionMatrix, MetricError> {
    if y_true.len() != y_pred.len() {
        return Err(MetricError::LengthMismatch {
            truth: y_true.len(),
            pred: y_pred.len(),
        });
    }
    if y_true.is_empty() {
        return Err(MetricError::Empty);
    }
    let mut counts = vec![vec![0u64; n_classes]; n_classes];
    for (&t, &p) in y_true.iter().zip(y_pred) {
        let bad = if t >= n_classes { Some(t) } else if p >= n_classes { Some(p) } else { None };
        if let Some(label) = bad {
            return Err(MetricError::LabelOutOfRange { label, n_classes });
        }
        counts[t][p] += 1;
    }
    Ok(ConfusionMatrix { n_classes, counts })
}

pub fn accuracy(cm: &ConfusionMatrix) -> Result<f64, MetricError> {
    let total = cm.nonempty()?;
    Ok(cm.trace() as f64 / total)
}

fn ratio(num: f64, den: f64) -> f64 {
    if den == 0.0 {
        0.0
    } else {
        num / den
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ClassScores {
    pub precision: Vec<f64>,
    pub recall: Vec<f64>,
    pub f1: Vec<f64>,
    pub support: Vec<u64>,
    pub macro_precision: f64,
    pub macro_recall: f64,
    pub macro_f1: f64,
    pub weighted_f1: f64,
}

pub fn precision_recall_f1(cm: &ConfusionMatrix) -> Result<ClassScores, MetricError> {
    let total = cm.nonempty()?;
    let rows = cm.row_sums();
    let cols = cm.col_sums();
    let n = cm.n_classes;
    let mut precision = Vec::with_capacity(n);
    let mut recall = Vec::with_capacity(n);
    let mut f1 = Vec::with_capacity(n);
    for c in 0..n {
        let tp = cm.counts[c][c] as f64;
        let p = ratio(tp, cols[c] as f64);
        let r = ratio(tp, rows[c] as f64);
        precision.push(p);
        recall.push(r);
        f1.push(ratio(2.0 * p * r, p + r));
    }
    let mean = |v: &[f64]| v.iter().sum::<f64>() / n as f64;
    let weighted_f1 = f1
        .iter()
        .zip(&rows)
        .map(|(f, &s)| s as f64 / total * f)
        .sum();
    Ok(ClassScores {
        macro_precision: mean(&precision),
        macro_recall: mean(&recall),
        macro_f1: mean(&f1),
        weighted_f1,
        precision,
        recall,
        f1,
        support: rows,
    })
}

/// Multiclass Matthews correlation coefficient.
pub fn mcc(cm: &ConfusionMatrix) -> Result<f64, MetricError> {
    let s = cm.nonempty()?;
    let c = cm.trace() as f64;
    let t: Vec<f64> = cm.row_sums().into_iter().map(|v| v as f64).collect();
    let p: Vec<f64> = cm.col_sums().into_iter().map(|v| v as f64).collect();
    let pt: f64 = p.iter().zip(&t).map(|(a, b)| a * b).sum();
    let pp: f64 = p.iter().map(|v| v * v).sum();
    let tt: f64 = t.iter().map(|v| v * v).sum();
    let den = ((s * s - pp) * (s * s - tt)).sqrt();
    Ok(ratio(c * s - pt, den))
}

/// Cohen's kappa.
pub fn kappa(cm: &ConfusionMatrix) -> Result<f64, MetricError> {
    let total = cm.nonempty()?;
    let po = cm.trace() as f64 / total;
    let pe: f64 = cm
        .row_sums()
        .iter()
        .zip(cm.col_sums())
        .map(|(&r, c)| (r as f64 / total) * (c as f64 / total))
        .sum();
    Ok(ratio(po - pe, 1.0 - pe))
}

/// Metrics for one fold, computed at window level.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MetricReport {
    pub n_samples: u64,
    pub accuracy: f64,
    pub precision: Vec<f64>,
    pub recall: Vec<f64>,
    pub f1: Vec<f64>,
    pub support: Vec<u64>,
    pub macro_precision: f64,
    pub macro_recall: f64,
    pub macro_f1: f64,
    pub weighted_f1: f64,
    /// F1 of class 1, reported for binary tasks only.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub positive_f1: Option<f64>,
    pub mcc: f64,
    pub kappa: f64,
    /// Accuracy after majority-voting windows within each trial.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub trial_accuracy: Option<f64>,
    pub confusion: ConfusionMatrix,
}

impl MetricReport {
    pub fn from_confusion(cm: ConfusionMatrix) -> Result<Self, MetricError> {
        let scores = precision_recall_f1(&cm)?;
        Ok(Self {
            n_samples: cm.total(),
            accuracy: accuracy(&cm)?,
            positive_f1: (cm.n_classes == 2).then(|| scores.f1[1]),
            mcc: mcc(&cm)?,
            kappa: kappa(&cm)?,
            precision: scores.precision,
            recall: scores.recall,
            f1: scores.f1,
            support: scores.support,
            macro_precision: scores.macro_precision,
            macro_recall: scores.macro_recall,
            macro_f1: scores.macro_f1,
            weighted_f1: scores.weighted_f1,
            trial_accuracy: None,
            confusion: cm,
        })
    }

    pub fn from_labels(y_true: &[usize], y_pred: &[usize], n_classes: usize) -> Result<Self, MetricError> {
        Self::from_confusion(confusion_matrix(y_true, y_pred, n_classes)?)
    }

    /// Scalar metrics by name, in presentation order.
    pub fn scalars(&self) -> Vec<(&'static str, f64)> {
        let mut out = vec![
            ("accuracy", self.accuracy),
            ("f1", self.macro_f1),
            ("weighted_f1", self.weighted_f1),
        ];
        if let Some(f) = self.positive_f1 {
            out.push(("positive_f1", f));
        }
        out.extend([
            ("precision", self.macro_precision),
            ("recall", self.macro_recall),
            ("mcc", self.mcc),
            ("kappa", self.kappa),
        ]);
        if let Some(a) = self.trial_accuracy {
            out.push(("trial_accuracy", a));
        }
        out
    }
}

/// Majority vote per group (lowest class index on ties). Returns voted
/// (truth, prediction) pairs in first-appearance order of the groups.
pub fn majority_vote<K: Ord + Clone>(
    groups: &[K],
    y_true: &[usize],
    y_pred: &[usize],
    n_classes: usize,
) -> Result<(Vec<usize>, Vec<usize>), MetricError> {
    if groups.len() != y_true.len() || y_true.len() != y_pred.len() {
        return Err(MetricError::LengthMismatch {
            truth: y_true.len(),
            pred: y_pred.len(),
        });
    }
    let mut order: Vec<K> = Vec::new();
    let mut votes: BTreeMap<K, (usize, Vec<u64>)> = BTreeMap::new();
    for ((g, &t), &p) in groups.iter().zip(y_true).zip(y_pred) {
        if p >= n_classes {
            return Err(MetricError::LabelOutOfRange { label: p, n_classes });
        }
        let entry = votes.entry(g.clone()).or_insert_with(|| {
            order.push(g.clone());
            (t, vec![0; n_classes])
        });
        entry.1[p] += 1;
    }
    let mut truth = Vec::with_capacity(order.len());
    let mut pred = Vec::with_capacity(order.len());
    for g in &order {
        let (t, counts) = &votes[g];
        let max = *counts.iter().max().unwrap_or(&0);
        truth.push(*t);
        pred.push(counts.iter().position(|&c| c == max).unwrap_or(0));
    }
    Ok((truth, pred))
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct MeanStd {
    pub mean: f64,
    pub std: f64,
}

impl MeanStd {
    pub fn of(values: &[f64]) -> Self {
        let n = values.len() as f64;
        let mean = values.iter().sum::<f64>() / n;
        let std = if values.len() < 2 {
            0.0
        } else {
            (values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1.0)).sqrt()
        };
        Self { mean, std }
    }
}

impl std::fmt::Display for MeanStd {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "{:.2} ± {:.2}", self.mean, self.std)
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct AggregateReport {
    pub n_folds: usize,
    /// Metric name → mean and sample std across folds, in presentation order.
    pub metrics: Vec<(String, MeanStd)>,
    /// Per-fold reports; run summaries store these with each fold instead.
    #[serde(default, skip_serializing)]
    pub folds: Vec<MetricReport>,
}

impl AggregateReport {
    pub fn get(&self, name: &str) -> Option<MeanStd> {
        self.metrics.iter().find(|(n, _)| n == name).map(|(_, m)| *m)
    }
}

/// Mean and sample standard deviation of every scalar metric across folds.
pub fn aggregate(reports: &[MetricReport]) -> Result<AggregateReport, MetricError> {
    let first = reports.first().ok_or(MetricError::NoReports)?;
    let metrics = first
        .scalars()
        .into_iter()
        .map(|(name, _)| {
            let values: Vec<f64> = reports
                .iter()
                .filter_map(|r| r.scalars().into_iter().find(|(n, _)| *n == name).map(|(_, v)| v))
                .collect();
            (name.to_string(), MeanStd::of(&values))
        })
        .collect();
    Ok(AggregateReport {
        n_folds: reports.len(),
        metrics,
        folds: reports.to_vec(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;
    use proptest::prelude::*;

    fn cm(rows: &[&[u64]]) -> ConfusionMatrix {
        ConfusionMatrix::from_counts(rows.iter().map(|r| r.to_vec()).collect())
    }

    #[test]
    fn confusion_examples() {
        let m = confusion_matrix(&[0, 0, 1, 1], &[0, 1, 1, 1], 2).unwrap();
        assert_eq!(m.counts, vec![vec![1, 1], vec![0, 2]]);
        let d = confusion_matrix(&[0, 1, 2], &[0, 1, 2], 3).unwrap();
        assert_eq!(d.trace(), 3);
        assert_eq!(confusion_matrix(&[], &[], 2).unwrap_err(), MetricError::Empty);
        assert!(matches!(
            confusion_matrix(&[0], &[0, 1], 2),
            Err(MetricError::LengthMismatch { .. })
        ));
        assert!(matches!(
            confusion_matrix(&[0], &[2], 2),
            Err(MetricError::LabelOutOfRange { label: 2, .. })
        ));
    }

    #[test]
    fn accuracy_examples() {
        assert_relative_eq!(accuracy(&cm(&[&[50, 10], &[5, 35]])).unwrap(), 0.85);
        assert_eq!(accuracy(&cm(&[&[3, 0], &[0, 4]])).unwrap(), 1.0);
        assert_eq!(accuracy(&cm(&[&[0, 3], &[4, 0]])).unwrap(), 0.0);
        assert_eq!(accuracy(&cm(&[&[0, 0], &[0, 0]])).unwrap_err(), MetricError::Empty);
    }

    #[test]
    fn f1_examples() {
        let s = precision_recall_f1(&cm(&[&[50, 10], &[5, 35]])).unwrap();
        let (p, r) = (35.0 / 45.0, 35.0 / 40.0);
        assert_relative_eq!(s.precision[1], p, max_relative = 1e-15);
        assert_relative_eq!(s.recall[1], r, max_relative = 1e-15);
        assert_relative_eq!(s.f1[1], 2.0 * p * r / (p + r), max_relative = 1e-15);
        assert!((s.f1[1] - 0.8235).abs() < 1e-4);

        let perfect = precision_recall_f1(&cm(&[&[2, 0], &[0, 5]])).unwrap();
        assert_eq!(perfect.f1, vec![1.0, 1.0]);
        assert_eq!((perfect.macro_f1, perfect.weighted_f1), (1.0, 1.0));

        let absent = precision_recall_f1(&cm(&[&[2, 0, 0], &[0, 3, 0], &[0, 0, 0]])).unwrap();
        assert_eq!(absent.f1[2], 0.0);
        assert_eq!(absent.support[2], 0);
        assert_relative_eq!(absent.weighted_f1, 1.0);
        assert_relative_eq!(absent.macro_f1, 2.0 / 3.0);
    }

    #[test]
    fn mcc_and_kappa_examples() {
        assert_eq!(mcc(&cm(&[&[3, 0], &[0, 4]])).unwrap(), 1.0);
        assert_eq!(mcc(&cm(&[&[2, 2], &[2, 2]])).unwrap(), 0.0);
        assert_eq!(mcc(&cm(&[&[0, 5], &[0, 3]])).unwrap(), 0.0);
        assert_eq!(kappa(&cm(&[&[3, 0], &[0, 4]])).unwrap(), 1.0);
        assert_eq!(kappa(&cm(&[&[2, 2], &[2, 2]])).unwrap(), 0.0);
        assert_eq!(kappa(&cm(&[&[6, 0], &[0, 0]])).unwrap(), 0.0);
    }

    #[test]
    fn chance_mcc_matches_pairwise_correlation() {
        // Pearson correlation of the one-hot encodings summed over classes.
        let y_true = [0, 0, 0, 0, 1, 1, 1, 1];
        let y_pred = [0, 0, 1, 1, 0, 0, 1, 1];
        let mean = |v: &[f64]| v.iter().sum::<f64>() / v.len() as f64;
        let t: Vec<f64> = y_true.iter().map(|&v| v as f64).collect();
        let p: Vec<f64> = y_pred.iter().map(|&v| v as f64).collect();
        let (mt, mp) = (mean(&t), mean(&p));
        let cov: f64 = t.iter().zip(&p).map(|(a, b)| (a - mt) * (b - mp)).sum();
        assert_eq!(cov, 0.0);
        let m = confusion_matrix(&y_true, &y_pred, 2).unwrap();
        assert_eq!(mcc(&m).unwrap(), 0.0);
    }

    #[test]
    fn aggregate_examples() {
        let base = MetricReport::from_labels(&[0, 1], &[0, 1], 2).unwrap();
        let with_acc = |a: f64| MetricReport {
            accuracy: a,
            ..base.clone()
        };
        let agg = aggregate(&[with_acc(0.5), with_acc(0.7)]).unwrap();
        let acc = agg.get("accuracy").unwrap();
        assert_relative_eq!(acc.mean, 0.6, max_relative = 1e-15);
        assert_relative_eq!(acc.std, 0.02f64.sqrt(), max_relative = 1e-12);
        assert!((acc.std - 0.1414).abs() < 1e-4);
        assert_eq!(aggregate(&[with_acc(0.5)]).unwrap().get("accuracy").unwrap().std, 0.0);
        let same = aggregate(&[base.clone(), base.clone(), base]).unwrap();
        assert!(same.metrics.iter().all(|(_, m)| m.std == 0.0));
        assert_eq!(aggregate(&[]).unwrap_err(), MetricError::NoReports);
    }

    #[test]
    fn binary_reports_positive_f1() {
        let r = MetricReport::from_labels(&[0, 0, 1, 1], &[0, 1, 1, 1], 2).unwrap();
        assert_eq!(r.positive_f1, Some(r.f1[1]));
        let r3 = MetricReport::from_labels(&[0, 1, 2], &[0, 1, 2], 3).unwrap();
        assert_eq!(r3.positive_f1, None);
    }

    #[test]
    fn majority_vote_per_trial() {
        let groups = ["a", "a", "a", "b", "b"];
        let (t, p) = majority_vote(&groups, &[1, 1, 1, 0, 0], &[1, 0, 1, 0, 1], 2).unwrap();
        assert_eq!(t, vec![1, 0]);
        // Tie in "b" resolves to the lowest index.
        assert_eq!(p, vec![1, 0]);
    }

    fn permute(m: &ConfusionMatrix, perm: &[usize]) -> ConfusionMatrix {
        let n = m.n_classes;
        let mut counts = vec![vec![0; n]; n];
        for i in 0..n {
            for j in 0..n {
                counts[perm[i]][perm[j]] = m.counts[i][j];
            }
        }
        ConfusionMatrix::from_counts(counts)
    }

    proptest! {
        #[test]
        fn equal_support_makes_weighted_equal_macro(
            preds in proptest::collection::vec(0usize..3, 30)
        ) {
            let truth: Vec<usize> = (0..30).map(|i| i % 3).collect();
            let s = precision_recall_f1(&confusion_matrix(&truth, &preds, 3).unwrap()).unwrap();
            prop_assert!((s.weighted_f1 - s.macro_f1).abs() < 1e-12);
        }

        #[test]
        fn metrics_are_relabeling_invariant(
            pairs in proptest::collection::vec((0usize..4, 0usize..4), 1..100),
            perm in Just(vec![0usize, 1, 2, 3]).prop_shuffle(),
        ) {
            let (t, p): (Vec<usize>, Vec<usize>) = pairs.into_iter().unzip();
            let m = confusion_matrix(&t, &p, 4).unwrap();
            let q = permute(&m, &perm);
            let (a, b) = (MetricReport::from_confusion(m).unwrap(), MetricReport::from_confusion(q).unwrap());
            for ((_, x), (_, y)) in a.scalars().iter().zip(b.scalars()) {
                prop_assert!((x - y).abs() < 1e-12);
            }
            for (c, &moved) in perm.iter().enumerate() {
                prop_assert_eq!(a.f1[c], b.f1[moved]);
            }
        }
    }
}
