//! Pre-processing: cropping, channel removal, notch and band-pass filtering,
//! resampling, normalization and windowing.
//!
//! A [`TransformSpec`] is an ordered recipe. It is validated against the
//! running sampling rate and channel set before any sample is touched, and it
//! is written verbatim into run summaries.

pub mod filter;
mod ops;
mod presets;
pub mod resample;
mod window;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::dataset::{SignalBlock, TrialKey};
use crate::labeling::ClassLabel;

pub use filter::{bandpass_butterworth, notch_filter, DEFAULT_BANDPASS_ORDER, DEFAULT_NOTCH_Q};
pub use ops::{crop, drop_channels, normalize, NormalizeMethod};
pub use presets::PRESET_NAMES;
pub use resample::resample;
pub use window::{window, window_layout, WindowLayout};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum TransformError {
    #[error("{0}")]
    Invalid(String),
    #[error("unknown channel {0:?}")]
    UnknownChannel(String),
    #[error("crop of {pre_s} s + {post_s} s does not fit a {duration_s} s signal")]
    CropTooLong {
        pre_s: f64,
        post_s: f64,
        duration_s: f64,
    },
    #[error("{what} {freq_hz} Hz is not below the Nyquist frequency {nyquist_hz} Hz")]
    AboveNyquist {
        what: &'static str,
        freq_hz: f64,
        nyquist_hz: f64,
    },
    #[error("rate change {fs_in} Hz -> {fs_out} Hz is not a ratio L/M with L, M <= 1024")]
    RatioTooComplex { fs_in: f64, fs_out: f64 },
    #[error("window of {size_s} s is longer than the {duration_s} s signal")]
    WindowTooLong { size_s: f64, duration_s: f64 },
    #[error("unknown transform preset {0:?}")]
    UnknownPreset(String),
    #[error("step {index} ({op}): {source}")]
    Step {
        index: usize,
        op: &'static str,
        #[source]
        source: Box<TransformError>,
    },
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "op", rename_all = "snake_case", deny_unknown_fields)]
pub enum TransformStep {
    Crop {
        #[serde(default)]
        pre_s: f64,
        #[serde(default)]
        post_s: f64,
    },
    DropChannels {
        names: Vec<String>,
    },
    Notch {
        f0_hz: f64,
        #[serde(default = "default_q")]
        q: f64,
    },
    Bandpass {
        lo_hz: f64,
        hi_hz: f64,
        #[serde(default = "default_order")]
        order: usize,
    },
    Resample {
        fs_out_hz: f64,
    },
    Normalize {
        method: NormalizeMethod,
    },
    Window {
        size_s: f64,
        #[serde(default)]
        overlap_s: f64,
    },
}

fn default_q() -> f64 {
    DEFAULT_NOTCH_Q
}

fn default_order() -> usize {
    DEFAULT_BANDPASS_ORDER
}

impl TransformStep {
    pub fn name(&self) -> &'static str {
        match self {
            TransformStep::Crop { .. } => "crop",
            TransformStep::DropChannels { .. } => "drop_channels",
            TransformStep::Notch { .. } => "notch",
            TransformStep::Bandpass { .. } => "bandpass",
            TransformStep::Resample { .. } => "resample",
            TransformStep::Normalize { .. } => "normalize",
            TransformStep::Window { .. } => "window",
        }
    }

    /// Apply a non-window step.
    fn apply(&self, signal: &SignalBlock) -> Result<SignalBlock, TransformError> {
        match self {
            TransformStep::Crop { pre_s, post_s } => crop(signal, *pre_s, *post_s),
            TransformStep::DropChannels { names } => drop_channels(signal, names),
            TransformStep::Notch { f0_hz, q } => notch_filter(signal, *f0_hz, *q),
            TransformStep::Bandpass {
                lo_hz,
                hi_hz,
                order,
            } => bandpass_butterworth(signal, *lo_hz, *hi_hz, *order),
            TransformStep::Resample { fs_out_hz } => resample(signal, *fs_out_hz),
            TransformStep::Normalize { method } => normalize(signal, *method),
            TransformStep::Window { .. } => Ok(signal.clone()),
        }
    }
}

/// Ordered steps; serializes as a bare list.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct TransformSpec {
    pub steps: Vec<TransformStep>,
}

impl TransformSpec {
    pub fn new(steps: Vec<TransformStep>) -> Self {
        Self { steps }
    }

    /// One of the shipped per-dataset recipes; see [`PRESET_NAMES`].
    pub fn preset(name: &str) -> Result<Self, TransformError> {
        presets::preset(name)
    }

    /// Sampling rate after every rate-changing step.
    pub fn output_rate(&self, fs_in: f64) -> f64 {
        self.steps.iter().fold(fs_in, |fs, s| match s {
            TransformStep::Resample { fs_out_hz } => *fs_out_hz,
            _ => fs,
        })
    }

    pub fn window_step(&self) -> Option<(f64, f64)> {
        self.steps.iter().find_map(|s| match s {
            TransformStep::Window { size_s, overlap_s } => Some((*size_s, *overlap_s)),
            _ => None,
        })
    }

    /// Check the recipe against an input rate and channel set without
    /// touching data. Errors carry the offending step index.
    pub fn validate<S: AsRef<str>>(&self, fs_in: f64, channels: &[S]) -> Result<(), TransformError> {
        let mut fs = fs_in;
        let mut present: Vec<String> = channels.iter().map(|c| c.as_ref().to_string()).collect();
        let n = self.steps.len();
        for (index, step) in self.steps.iter().enumerate() {
            let at = |source: TransformError| TransformError::Step {
                index,
                op: step.name(),
                source: Box::new(source),
            };
            match step {
                TransformStep::Crop { pre_s, post_s } => {
                    if !(*pre_s >= 0.0 && *post_s >= 0.0) {
                        return Err(at(TransformError::Invalid(
                            "crop lengths must be non-negative".into(),
                        )));
                    }
                }
                TransformStep::DropChannels { names } => {
                    for name in names {
                        let pos = present
                            .iter()
                            .position(|c| c == name)
                            .ok_or_else(|| at(TransformError::UnknownChannel(name.clone())))?;
                        present.remove(pos);
                    }
                    if present.is_empty() {
                        return Err(at(TransformError::Invalid(
                            "every channel would be dropped".into(),
                        )));
                    }
                }
                TransformStep::Notch { f0_hz, q } => {
                    filter::design_notch(*f0_hz, *q, fs).map_err(at)?;
                }
                TransformStep::Bandpass {
                    lo_hz,
                    hi_hz,
                    order,
                } => {
                    filter::design_butter_bandpass(*lo_hz, *hi_hz, *order, fs).map_err(at)?;
                }
                TransformStep::Resample { fs_out_hz } => {
                    resample::rational_ratio(fs, *fs_out_hz).map_err(at)?;
                    fs = *fs_out_hz;
                }
                TransformStep::Normalize { .. } => {}
                TransformStep::Window { size_s, overlap_s } => {
                    if index + 1 != n {
                        return Err(at(TransformError::Invalid(
                            "window must be the last step".into(),
                        )));
                    }
                    if !(*size_s > 0.0 && *overlap_s >= 0.0 && overlap_s < size_s) {
                        return Err(at(TransformError::Invalid(format!(
                            "window needs 0 <= overlap < size, got size {size_s}, overlap {overlap_s}"
                        ))));
                    }
                }
            }
        }
        Ok(())
    }
}

/// One labeled window of a trial.
#[derive(Clone, Debug, PartialEq)]
pub struct WindowSegment {
    pub trial: TrialKey,
    pub window_index: usize,
    pub signal: SignalBlock,
    pub label: ClassLabel,
}

/// Run `spec` on one trial. Without a window step the whole trial becomes a
/// single segment. Every segment carries the post-pipeline sampling rate.
pub fn apply_pipeline(
    trial: &TrialKey,
    signal: &SignalBlock,
    label: &ClassLabel,
    spec: &TransformSpec,
) -> Result<Vec<WindowSegment>, TransformError> {
    spec.validate(signal.sampling_rate_hz(), signal.channels())?;
    let mut current = signal.clone();
    for (index, step) in spec.steps.iter().enumerate() {
        current = step.apply(&current).map_err(|source| TransformError::Step {
            index,
            op: step.name(),
            source: Box::new(source),
        })?;
    }
    let blocks = match spec.window_step() {
        Some((size_s, overlap_s)) => {
            window(&current, size_s, overlap_s).map_err(|source| TransformError::Step {
                index: spec.steps.len() - 1,
                op: "window",
                source: Box::new(source),
            })?
        }
        None => vec![current],
    };
    Ok(blocks
        .into_iter()
        .enumerate()
        .map(|(window_index, signal)| WindowSegment {
            trial: trial.clone(),
            window_index,
            signal,
            label: label.clone(),
        })
        .collect())
}
