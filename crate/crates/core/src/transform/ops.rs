use serde::{Deserialize, Serialize};

use super::TransformError;
use crate::dataset::SignalBlock;

/// Remove `round(pre_s·fs)` leading and `round(post_s·fs)` trailing samples.
pub fn crop(signal: &SignalBlock, pre_s: f64, post_s: f64) -> Result<SignalBlock, TransformError> {
    if !(pre_s >= 0.0 && post_s >= 0.0) {
        return Err(TransformError::Invalid(format!(
            "crop lengths must be non-negative, got pre {pre_s} s, post {post_s} s"
        )));
    }
    let fs = signal.sampling_rate_hz();
    let pre = (pre_s * fs).round() as usize;
    let post = (post_s * fs).round() as usize;
    let n = signal.n_samples();
    if pre + post >= n {
        return Err(TransformError::CropTooLong {
            pre_s,
            post_s,
            duration_s: signal.duration_s(),
        });
    }
    let data = signal
        .data()
        .iter()
        .map(|row| row[pre..n - post].to_vec())
        .collect();
    Ok(signal.with_data(data, fs))
}

/// Drop the named channels, keeping the remaining order.
pub fn drop_channels<S: AsRef<str>>(
    signal: &SignalBlock,
    names: &[S],
) -> Result<SignalBlock, TransformError> {
    if let Some(missing) = names
        .iter()
        .find(|n| !signal.channels().iter().any(|c| c == n.as_ref()))
    {
        return Err(TransformError::UnknownChannel(missing.as_ref().to_string()));
    }
    let (channels, data): (Vec<String>, Vec<Vec<f64>>) = signal
        .channels()
        .iter()
        .zip(signal.data())
        .filter(|(c, _)| !names.iter().any(|n| n.as_ref() == c.as_str()))
        .map(|(c, d)| (c.clone(), d.clone()))
        .unzip();
    SignalBlock::new(channels, data, signal.sampling_rate_hz())
        .map_err(|e| TransformError::Invalid(e.to_string()))
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum NormalizeMethod {
    Zscore,
    Minmax,
}

fn is_flat(spread: f64, level: f64) -> bool {
    !(spread > 1e-12 * level.abs().max(1.0))
}

/// Per-channel normalization. Z-score uses the population standard
/// deviation; constant channels become all zeros under either method.
pub fn normalize(signal: &SignalBlock, method: NormalizeMethod) -> Result<SignalBlock, TransformError> {
    if signal.n_samples() == 0 {
        return Err(TransformError::Invalid("cannot normalize an empty signal".into()));
    }
    let data = signal
        .data()
        .iter()
        .map(|row| {
            let n = row.len() as f64;
            match method {
                NormalizeMethod::Zscore => {
                    let mean = row.iter().sum::<f64>() / n;
                    let sd = (row.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / n).sqrt();
                    if is_flat(sd, mean) {
                        vec![0.0; row.len()]
                    } else {
                        row.iter().map(|v| (v - mean) / sd).collect()
                    }
                }
                NormalizeMethod::Minmax => {
                    let lo = row.iter().copied().fold(f64::INFINITY, f64::min);
                    let hi = row.iter().copied().fold(f64::NEG_INFINITY, f64::max);
                    if is_flat(hi - lo, lo) {
                        vec![0.0; row.len()]
                    } else {
                        row.iter().map(|v| (v - lo) / (hi - lo)).collect()
                    }
                }
            }
        })
        .collect();
    Ok(signal.with_data(data, signal.sampling_rate_hz()))
}
