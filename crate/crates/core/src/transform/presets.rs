//! Per-dataset recipes for the leave-one-subject-out protocol. Every recipe
//! ends by resampling to 128 Hz and cutting 4 s windows without overlap.

use super::{TransformError, TransformSpec, TransformStep};
use crate::labeling::normalize_name;

pub const PRESET_NAMES: [&str; 7] = [
    "mahnob_hci",
    "deap",
    "amigos",
    "dreamer",
    "seed",
    "seed_iv",
    "deap_validation",
];

pub(crate) const MAHNOB_DROPPED: [&str; 15] = [
    "EXG1", "EXG2", "EXG3", "EXG4", "EXG5", "EXG6", "EXG7", "EXG8", "GSR1", "GSR2", "Erg1",
    "Erg2", "Resp", "Temp", "Status",
];
pub(crate) const DEAP_DROPPED: [&str; 8] =
    ["EXG1", "EXG2", "EXG3", "EXG4", "GSR1", "Plet", "Resp", "Temp"];
pub(crate) const AMIGOS_DROPPED: [&str; 3] = ["ECG_Right", "ECG_Left", "GSR"];
/// DEAP channels removed for the leave-one-trial-out comparison recipe.
pub(crate) const DEAP_VALIDATION_DROPPED: [&str; 12] = [
    "EXG1", "EXG2", "EXG3", "EXG4", "GSR1", "Plet", "Resp", "Temp", "Oz", "Pz", "Fz", "Cz",
];

const TARGET_RATE_HZ: f64 = 128.0;
const WINDOW_S: f64 = 4.0;
const LINE_HZ: f64 = 50.0;

fn crop(pre_s: f64, post_s: f64) -> TransformStep {
    TransformStep::Crop { pre_s, post_s }
}

fn drop(names: &[&str]) -> TransformStep {
    TransformStep::DropChannels {
        names: names.iter().map(|s| s.to_string()).collect(),
    }
}

fn bandpass(lo_hz: f64, hi_hz: f64) -> TransformStep {
    TransformStep::Bandpass {
        lo_hz,
        hi_hz,
        order: super::DEFAULT_BANDPASS_ORDER,
    }
}

fn notch() -> TransformStep {
    TransformStep::Notch {
        f0_hz: LINE_HZ,
        q: super::DEFAULT_NOTCH_Q,
    }
}

fn tail() -> [TransformStep; 2] {
    [
        TransformStep::Resample {
            fs_out_hz: TARGET_RATE_HZ,
        },
        TransformStep::Window {
            size_s: WINDOW_S,
            overlap_s: 0.0,
        },
    ]
}

pub(crate) fn preset(name: &str) -> Result<TransformSpec, TransformError> {
    let mut steps = match normalize_name(name).as_str() {
        "mahnob_hci" | "mahnob" => vec![
            crop(30.0, 30.0),
            drop(&MAHNOB_DROPPED),
            bandpass(0.3, 45.0),
            notch(),
        ],
        "deap" => vec![crop(3.0, 0.0), drop(&DEAP_DROPPED), notch()],
        "amigos" => vec![drop(&AMIGOS_DROPPED), notch()],
        "dreamer" | "seed" | "seed_iv" => vec![bandpass(0.3, 45.0), notch()],
        "deap_validation" => {
            let mut steps = vec![
                crop(3.0, 0.0),
                drop(&DEAP_VALIDATION_DROPPED),
                TransformStep::Resample {
                    fs_out_hz: TARGET_RATE_HZ,
                },
                bandpass(4.0, 45.0),
            ];
            steps.push(TransformStep::Window {
                size_s: WINDOW_S,
                overlap_s: 0.0,
            });
            return Ok(TransformSpec::new(steps));
        }
        _ => return Err(TransformError::UnknownPreset(name.to_string())),
    };
    steps.extend(tail());
    Ok(TransformSpec::new(steps))
}
