//! Ground truth: ratings and categorical tags to discrete class labels.
//!
//! The boundary convention is the same everywhere: a rating less than or
//! equal to its threshold is *low* (0), strictly above is *high* (1). The
//! quadrant scheme composes two such decisions.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::dataset::{Dimension, LabelRecord};

#[derive(Debug, Error, PartialEq)]
pub enum LabelError {
    #[error("rating {rating} outside scale [{min}, {max}]")]
    OutOfScale { rating: f64, min: f64, max: f64 },
    #[error("unknown class {raw:?}; expected one of {classes:?}")]
    UnknownClass { raw: String, classes: Vec<String> },
    #[error("trial has no {0} rating")]
    MissingRating(Dimension),
    #[error("trial has no categorical label")]
    MissingCategory,
    #[error("class index {index} out of range for {n_classes} classes")]
    IndexOutOfRange { index: usize, n_classes: usize },
    #[error("cannot compute a class distribution of no labels")]
    Empty,
    #[error("invalid ground-truth scheme: {0}")]
    InvalidScheme(String),
}

#[derive(Clone, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct ClassLabel {
    pub index: usize,
    pub name: String,
}

impl ClassLabel {
    pub fn new(index: usize, name: impl Into<String>) -> Self {
        Self {
            index,
            name: name.into(),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct RatingScale {
    pub min: f64,
    pub max: f64,
}

impl RatingScale {
    pub const NINE_POINT: RatingScale = RatingScale { min: 1.0, max: 9.0 };
    pub const FIVE_POINT: RatingScale = RatingScale { min: 1.0, max: 5.0 };

    pub fn new(min: f64, max: f64) -> Self {
        Self { min, max }
    }

    pub fn of(record: &LabelRecord) -> Self {
        Self::new(record.scale_min, record.scale_max)
    }

    pub fn contains(&self, rating: f64) -> bool {
        rating >= self.min && rating <= self.max
    }

    fn check(&self, rating: f64) -> Result<(), LabelError> {
        if self.contains(rating) {
            Ok(())
        } else {
            Err(LabelError::OutOfScale {
                rating,
                min: self.min,
                max: self.max,
            })
        }
    }
}

pub const LOW: &str = "low";
pub const HIGH: &str = "high";
pub const QUADRANT_NAMES: [&str; 4] = ["LALV", "LAHV", "HALV", "HAHV"];

/// `rating <= threshold` is low (0), above is high (1).
pub fn binarize(rating: f64, threshold: f64, scale: RatingScale) -> Result<ClassLabel, LabelError> {
    scale.check(rating)?;
    Ok(if rating > threshold {
        ClassLabel::new(1, HIGH)
    } else {
        ClassLabel::new(0, LOW)
    })
}

/// Four-class valence/arousal quadrant: index = 2·high_arousal + high_valence.
pub fn quadrantize(
    valence: f64,
    arousal: f64,
    valence_threshold: f64,
    arousal_threshold: f64,
    scale: RatingScale,
) -> Result<ClassLabel, LabelError> {
    let v = binarize(valence, valence_threshold, scale)?.index;
    let a = binarize(arousal, arousal_threshold, scale)?.index;
    let index = 2 * a + v;
    Ok(ClassLabel::new(index, QUADRANT_NAMES[index]))
}

/// Case-insensitive lookup of `raw` in an ordered class list.
pub fn map_categorical(raw: &str, class_names: &[String]) -> Result<ClassLabel, LabelError> {
    class_names
        .iter()
        .position(|c| c.eq_ignore_ascii_case(raw.trim()))
        .map(|i| ClassLabel::new(i, class_names[i].clone()))
        .ok_or_else(|| LabelError::UnknownClass {
            raw: raw.to_string(),
            classes: class_names.to_vec(),
        })
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ClassDistribution {
    pub counts: Vec<usize>,
    pub proportions: Vec<f64>,
}

impl ClassDistribution {
    pub fn from_indices(indices: &[usize], n_classes: usize) -> Result<Self, LabelError> {
        if indices.is_empty() {
            return Err(LabelError::Empty);
        }
        let mut counts = vec![0usize; n_classes];
        for &i in indices {
            *counts.get_mut(i).ok_or(LabelError::IndexOutOfRange {
                index: i,
                n_classes,
            })? += 1;
        }
        let total = indices.len() as f64;
        let proportions = counts.iter().map(|&c| c as f64 / total).collect();
        Ok(Self {
            counts,
            proportions,
        })
    }

    pub fn total(&self) -> usize {
        self.counts.iter().sum()
    }

    /// Lowest-index modal class.
    pub fn mode(&self) -> usize {
        let max = self.counts.iter().copied().max().unwrap_or(0);
        self.counts.iter().position(|&c| c == max).unwrap_or(0)
    }
}

pub fn class_distribution(
    labels: &[ClassLabel],
    n_classes: usize,
) -> Result<ClassDistribution, LabelError> {
    let indices: Vec<usize> = labels.iter().map(|l| l.index).collect();
    ClassDistribution::from_indices(&indices, n_classes)
}

/// How trial ratings or tags become class labels. Recorded verbatim in every
/// run summary.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum GroundTruthScheme {
    DimensionalBinary {
        dimension: Dimension,
        threshold: f64,
        #[serde(default = "binary_names")]
        class_names: Vec<String>,
    },
    DimensionalQuadrant {
        valence_threshold: f64,
        arousal_threshold: f64,
        #[serde(default = "quadrant_names")]
        class_names: Vec<String>,
    },
    Categorical {
        class_names: Vec<String>,
    },
}

fn binary_names() -> Vec<String> {
    vec![LOW.into(), HIGH.into()]
}

fn quadrant_names() -> Vec<String> {
    QUADRANT_NAMES.iter().map(|s| s.to_string()).collect()
}

pub const SEED_CLASSES: [&str; 3] = ["negative", "neutral", "positive"];
pub const SEED_IV_CLASSES: [&str; 4] = ["neutral", "sadness", "fear", "happiness"];

impl GroundTruthScheme {
    pub fn binary(dimension: Dimension, threshold: f64) -> Self {
        GroundTruthScheme::DimensionalBinary {
            dimension,
            threshold,
            class_names: binary_names(),
        }
    }

    pub fn quadrant(valence_threshold: f64, arousal_threshold: f64) -> Self {
        GroundTruthScheme::DimensionalQuadrant {
            valence_threshold,
            arousal_threshold,
            class_names: quadrant_names(),
        }
    }

    pub fn categorical<S: AsRef<str>>(class_names: &[S]) -> Self {
        GroundTruthScheme::Categorical {
            class_names: class_names.iter().map(|s| s.as_ref().to_string()).collect(),
        }
    }

    /// Default scheme for a known dataset. Dimensional datasets binarize
    /// `dimension` at 4.5 (1-9 scales) or 3.0 (DREAMER, 1-5 scale); SEED and
    /// SEED-IV use their fixed categorical class order.
    pub fn dataset_default(dataset: &str, dimension: Dimension) -> Option<Self> {
        match normalize_name(dataset).as_str() {
            "amigos" | "deap" | "mahnob_hci" => Some(Self::binary(dimension, 4.5)),
            "dreamer" => Some(Self::binary(dimension, 3.0)),
            "seed" => Some(Self::categorical(&SEED_CLASSES)),
            "seed_iv" => Some(Self::categorical(&SEED_IV_CLASSES)),
            _ => None,
        }
    }

    pub fn class_names(&self) -> &[String] {
        match self {
            GroundTruthScheme::DimensionalBinary { class_names, .. }
            | GroundTruthScheme::DimensionalQuadrant { class_names, .. }
            | GroundTruthScheme::Categorical { class_names } => class_names,
        }
    }

    pub fn n_classes(&self) -> usize {
        self.class_names().len()
    }

    pub fn is_categorical(&self) -> bool {
        matches!(self, GroundTruthScheme::Categorical { .. })
    }

    /// Check class-name arity and, for dimensional schemes, that thresholds
    /// lie within `scale`.
    pub fn validate(&self, scale: Option<RatingScale>) -> Result<(), LabelError> {
        let invalid = |m: String| Err(LabelError::InvalidScheme(m));
        let thresholds: Vec<f64> = match self {
            GroundTruthScheme::DimensionalBinary {
                threshold,
                class_names,
                ..
            } => {
                if class_names.len() != 2 {
                    return invalid("binary schemes need exactly 2 class names".into());
                }
                vec![*threshold]
            }
            GroundTruthScheme::DimensionalQuadrant {
                valence_threshold,
                arousal_threshold,
                class_names,
            } => {
                if class_names.len() != 4 {
                    return invalid("quadrant schemes need exactly 4 class names".into());
                }
                vec![*valence_threshold, *arousal_threshold]
            }
            GroundTruthScheme::Categorical { class_names } => {
                if class_names.is_empty() {
                    return invalid("categorical schemes need at least one class".into());
                }
                vec![]
            }
        };
        if let Some(scale) = scale {
            if let Some(t) = thresholds.iter().find(|t| !scale.contains(**t)) {
                return invalid(format!(
                    "threshold {t} outside rating scale [{}, {}]",
                    scale.min, scale.max
                ));
            }
        }
        Ok(())
    }

    /// Class label of one trial. The returned name comes from this scheme's
    /// class list.
    pub fn label(&self, record: &LabelRecord) -> Result<ClassLabel, LabelError> {
        let scale = RatingScale::of(record);
        let rating = |d: Dimension| {
            record
                .dimensional
                .get(&d)
                .copied()
                .ok_or(LabelError::MissingRating(d))
        };
        let label = match self {
            GroundTruthScheme::DimensionalBinary {
                dimension,
                threshold,
                ..
            } => binarize(rating(*dimension)?, *threshold, scale)?,
            GroundTruthScheme::DimensionalQuadrant {
                valence_threshold,
                arousal_threshold,
                ..
            } => quadrantize(
                rating(Dimension::Valence)?,
                rating(Dimension::Arousal)?,
                *valence_threshold,
                *arousal_threshold,
                scale,
            )?,
            GroundTruthScheme::Categorical { class_names } => {
                let raw = record
                    .categorical
                    .as_deref()
                    .ok_or(LabelError::MissingCategory)?;
                return map_categorical(raw, class_names);
            }
        };
        Ok(ClassLabel::new(
            label.index,
            self.class_names()[label.index].clone(),
        ))
    }
}

pub(crate) fn normalize_name(name: &str) -> String {
    name.trim().to_ascii_lowercase().replace(['-', ' '], "_")
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;
    use std::collections::BTreeMap;

    const NINE: RatingScale = RatingScale::NINE_POINT;

    fn names(v: &[&str]) -> Vec<String> {
        v.iter().map(|s| s.to_string()).collect()
    }

    #[test]
    fn binarize_boundary_is_low() {
        assert_eq!(binarize(4.5, 4.5, NINE).unwrap().index, 0);
        assert_eq!(binarize(1.0, 1.0, NINE).unwrap().index, 0);
        assert_eq!(binarize(1.0, 7.0, NINE).unwrap().index, 0);
        let dreamer = binarize(3.2, 3.0, RatingScale::FIVE_POINT).unwrap();
        assert_eq!(dreamer, ClassLabel::new(1, HIGH));
    }

    #[test]
    fn binarize_rejects_out_of_scale() {
        assert!(matches!(
            binarize(9.5, 4.5, NINE),
            Err(LabelError::OutOfScale { .. })
        ));
        assert!(binarize(0.0, 4.5, NINE).is_err());
    }

    #[test]
    fn quadrant_examples() {
        assert_eq!(quadrantize(2.0, 2.0, 4.5, 4.5, NINE).unwrap().name, "LALV");
        let lahv = quadrantize(9.0, 1.0, 4.5, 4.5, NINE).unwrap();
        assert_eq!((lahv.index, lahv.name.as_str()), (1, "LAHV"));
        assert_eq!(quadrantize(4.5, 4.5, 4.5, 4.5, NINE).unwrap().index, 0);
        assert_eq!(quadrantize(1.0, 9.0, 4.5, 4.5, NINE).unwrap().name, "HALV");
        assert!(quadrantize(1.0, 10.0, 4.5, 4.5, NINE).is_err());
    }

    #[test]
    fn categorical_lookup() {
        let seed = names(&SEED_CLASSES);
        assert_eq!(map_categorical("positive", &seed).unwrap().index, 2);
        assert_eq!(map_categorical("Positive", &seed).unwrap().index, 2);
        let seed_iv = names(&SEED_IV_CLASSES);
        assert_eq!(map_categorical("fear", &seed_iv).unwrap().index, 2);
        assert!(matches!(
            map_categorical("ecstasy", &seed),
            Err(LabelError::UnknownClass { .. })
        ));
    }

    #[test]
    fn distribution_examples() {
        let d = ClassDistribution::from_indices(&[1, 1, 0, 1], 2).unwrap();
        assert_eq!(d.counts, vec![1, 3]);
        assert_eq!(d.proportions, vec![0.25, 0.75]);
        let same = ClassDistribution::from_indices(&[2, 2, 2], 3).unwrap();
        assert_eq!(same.proportions, vec![0.0, 0.0, 1.0]);
        assert_eq!(same.mode(), 2);
        assert_eq!(
            ClassDistribution::from_indices(&[], 2).unwrap_err(),
            LabelError::Empty
        );
        assert!(ClassDistribution::from_indices(&[3], 2).is_err());
    }

    #[test]
    fn scheme_labels_records() {
        let mut dimensional = BTreeMap::new();
        dimensional.insert(Dimension::Valence, 7.0);
        dimensional.insert(Dimension::Arousal, 3.0);
        let rec = LabelRecord {
            dimensional,
            categorical: Some("Neutral".into()),
            scale_min: 1.0,
            scale_max: 9.0,
        };
        let s = GroundTruthScheme::binary(Dimension::Arousal, 4.5);
        assert_eq!(s.label(&rec).unwrap(), ClassLabel::new(0, LOW));
        assert_eq!(GroundTruthScheme::quadrant(4.5, 4.5).label(&rec).unwrap().name, "LAHV");
        let seed = GroundTruthScheme::dataset_default("SEED", Dimension::Valence).unwrap();
        assert_eq!(seed.label(&rec).unwrap(), ClassLabel::new(1, "neutral"));
        let liking = GroundTruthScheme::binary(Dimension::Liking, 4.5);
        assert_eq!(
            liking.label(&rec).unwrap_err(),
            LabelError::MissingRating(Dimension::Liking)
        );
    }

    #[test]
    fn dataset_defaults() {
        let d = GroundTruthScheme::dataset_default("DREAMER", Dimension::Valence).unwrap();
        assert_eq!(d, GroundTruthScheme::binary(Dimension::Valence, 3.0));
        let m = GroundTruthScheme::dataset_default("MAHNOB-HCI", Dimension::Arousal).unwrap();
        assert_eq!(m, GroundTruthScheme::binary(Dimension::Arousal, 4.5));
        assert!(GroundTruthScheme::dataset_default("unknown", Dimension::Valence).is_none());
    }

    #[test]
    fn scheme_validation() {
        assert!(GroundTruthScheme::binary(Dimension::Valence, 4.5)
            .validate(Some(NINE))
            .is_ok());
        assert!(GroundTruthScheme::binary(Dimension::Valence, 6.0)
            .validate(Some(RatingScale::FIVE_POINT))
            .is_err());
        let bad = GroundTruthScheme::DimensionalBinary {
            dimension: Dimension::Valence,
            threshold: 4.5,
            class_names: names(&["a", "b", "c"]),
        };
        assert!(bad.validate(None).is_err());
    }

    #[test]
    fn scheme_serializes_with_kind_tag() {
        let s = GroundTruthScheme::binary(Dimension::Valence, 4.5);
        let text = toml::to_string(&s).unwrap();
        assert!(text.contains("kind = \"dimensional_binary\""), "{text}");
        let back: GroundTruthScheme = toml::from_str(&text).unwrap();
        assert_eq!(back, s);
        let short: GroundTruthScheme =
            toml::from_str("kind = \"dimensional_binary\"\ndimension = \"arousal\"\nthreshold = 3.0")
                .unwrap();
        assert_eq!(short, GroundTruthScheme::binary(Dimension::Arousal, 3.0));
    }

    proptest! {
        #[test]
        fn binarize_is_monotone(a in 1.0f64..=9.0, b in 1.0f64..=9.0, t in 1.0f64..=9.0) {
            let (lo, hi) = if a <= b { (a, b) } else { (b, a) };
            prop_assert!(binarize(lo, t, NINE).unwrap().index <= binarize(hi, t, NINE).unwrap().index);
        }

        #[test]
        fn quadrant_decomposes_into_bits(
            v in 1.0f64..=9.0, a in 1.0f64..=9.0, tv in 1.0f64..=9.0, ta in 1.0f64..=9.0
        ) {
            let q = quadrantize(v, a, tv, ta, NINE).unwrap().index;
            prop_assert_eq!(q & 1, binarize(v, tv, NINE).unwrap().index);
            prop_assert_eq!(q >> 1, binarize(a, ta, NINE).unwrap().index);
        }

        #[test]
        fn threshold_change_is_local(
            ratings in proptest::collection::vec(1.0f64..=9.0, 1..50),
            t1 in 1.0f64..=9.0, t2 in 1.0f64..=9.0,
        ) {
            let (lo, hi) = if t1 <= t2 { (t1, t2) } else { (t2, t1) };
            for r in ratings {
                let changed = binarize(r, t1, NINE).unwrap() != binarize(r, t2, NINE).unwrap();
                // Labels flip exactly for ratings in (lo, hi].
                prop_assert_eq!(changed, r > lo && r <= hi);
            }
        }

        #[test]
        fn proportions_are_counts_over_total(indices in proptest::collection::vec(0usize..4, 1..200)) {
            let d = ClassDistribution::from_indices(&indices, 4).unwrap();
            let total = indices.len() as f64;
            for (c, p) in d.counts.iter().zip(&d.proportions) {
                prop_assert!((*c as f64 / total - p).abs() <= 1e-15);
            }
            prop_assert!((d.proportions.iter().sum::<f64>() - 1.0).abs() <= 1e-12);
        }
    }
}
