#![allow(dead_code)]

use std::f64::consts::PI;
use std::path::Path;

use emoeval::dataset::SyntheticSpec;
use emoeval::models::ClassifierSpec;
use emoeval::runner::{DatasetSource, LoggingConfig, RunConfig, SplitConfig, TransformConfig};
use emoeval::splitting::SplitScheme;
use emoeval::transform::{TransformSpec, TransformStep};
use emoeval::SignalBlock;

pub fn sine(freq: f64, fs: f64, n: usize, amplitude: f64) -> Vec<f64> {
    (0..n)
        .map(|i| amplitude * (2.0 * PI * freq * i as f64 / fs).sin())
        .collect()
}

pub fn block(rows: Vec<Vec<f64>>, fs: f64) -> SignalBlock {
    let names = (0..rows.len()).map(|i| format!("c{i}")).collect();
    SignalBlock::new(names, rows, fs).unwrap()
}

pub fn rms(x: &[f64]) -> f64 {
    (x.iter().map(|v| v * v).sum::<f64>() / x.len() as f64).sqrt()
}

/// Amplitude and phase of the `freq` component of `x`, by quadrature
/// demodulation over whole periods.
pub fn demodulate(x: &[f64], freq: f64, fs: f64, start: usize) -> (f64, f64) {
    let (mut i_sum, mut q_sum) = (0.0, 0.0);
    for (k, v) in x.iter().enumerate() {
        let phase = 2.0 * PI * freq * (start + k) as f64 / fs;
        i_sum += v * phase.cos();
        q_sum += v * phase.sin();
    }
    let n = x.len() as f64;
    let (i_m, q_m) = (2.0 * i_sum / n, 2.0 * q_sum / n);
    ((i_m * i_m + q_m * q_m).sqrt(), i_m.atan2(q_m))
}

/// Band-pass then 4 s windows, for data already at 128 Hz.
pub fn basic_transform() -> TransformSpec {
    TransformSpec::new(vec![
        TransformStep::Bandpass {
            lo_hz: 0.3,
            hi_hz: 45.0,
            order: 4,
        },
        TransformStep::Window {
            size_s: 4.0,
            overlap_s: 0.0,
        },
    ])
}

pub fn synthetic_config(
    dir: &Path,
    spec: SyntheticSpec,
    split: SplitScheme,
    model: ClassifierSpec,
    seed: u64,
) -> RunConfig {
    let toml = format!(
        "seed = {seed}\n[dataset]\n[split]\nkind = \"loso\"\n[model]\nkind = \"majority_baseline\"\n"
    );
    let mut config = RunConfig::from_toml_str(&toml, dir).unwrap();
    config.dataset = DatasetSource {
        manifest: None,
        synthetic: Some(spec),
        synthetic_dir: Some("data".into()),
    };
    config.transform = TransformConfig {
        preset: None,
        steps: Some(basic_transform()),
    };
    config.split = SplitConfig {
        scheme: split,
        train_ratio: 0.8,
    };
    config.model = model;
    config.logging = LoggingConfig {
        output_dir: "out".into(),
        ..LoggingConfig::default()
    };
    config
}
