use super::TransformError;
use crate::dataset::SignalBlock;

/// Window geometry in samples.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct WindowLayout {
    pub length: usize,
    pub step: usize,
    pub count: usize,
}

impl WindowLayout {
    pub fn start(&self, index: usize) -> usize {
        index * self.step
    }
}

/// Lay out windows of `size_s` seconds with `overlap_s` seconds of overlap
/// over `n_samples` samples. Sizes convert to samples by rounding; the
/// trailing remainder shorter than a window is discarded.
pub fn window_layout(
    n_samples: usize,
    fs: f64,
    size_s: f64,
    overlap_s: f64,
) -> Result<WindowLayout, TransformError> {
    if !(size_s > 0.0 && overlap_s >= 0.0 && overlap_s < size_s) {
        return Err(TransformError::Invalid(format!(
            "window needs 0 <= overlap < size, got size {size_s} s, overlap {overlap_s} s"
        )));
    }
    let length = (size_s * fs).round() as usize;
    let step = ((size_s - overlap_s) * fs).round() as usize;
    if length == 0 || step == 0 {
        return Err(TransformError::Invalid(format!(
            "window of {size_s} s with overlap {overlap_s} s is shorter than one sample at {fs} Hz"
        )));
    }
    if length > n_samples {
        return Err(TransformError::WindowTooLong {
            size_s,
            duration_s: n_samples as f64 / fs,
        });
    }
    Ok(WindowLayout {
        length,
        step,
        count: (n_samples - length) / step + 1,
    })
}

/// Cut `signal` into equal-length windows.
pub fn window(
    signal: &SignalBlock,
    size_s: f64,
    overlap_s: f64,
) -> Result<Vec<SignalBlock>, TransformError> {
    let layout = window_layout(
        signal.n_samples(),
        signal.sampling_rate_hz(),
        size_s,
        overlap_s,
    )?;
    Ok((0..layout.count)
        .map(|i| {
            let start = layout.start(i);
            let data = signal
                .data()
                .iter()
                .map(|row| row[start..start + layout.length].to_vec())
                .collect();
            signal.with_data(data, signal.sampling_rate_hz())
        })
        .collect())
}
