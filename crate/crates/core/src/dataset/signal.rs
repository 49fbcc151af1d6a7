use std::fs;
use std::path::Path;

use super::{DatasetError, DatasetManifest, TrialKey};

pub const SIGNAL_EXT: &str = "f32raw";

/// One multichannel recording segment. Samples are stored per channel.
#[derive(Clone, Debug, PartialEq)]
pub struct SignalBlock {
    channels: Vec<String>,
    data: Vec<Vec<f64>>,
    sampling_rate_hz: f64,
}

impl SignalBlock {
    pub fn new(
        channels: Vec<String>,
        data: Vec<Vec<f64>>,
        sampling_rate_hz: f64,
    ) -> Result<Self, DatasetError> {
        if channels.len() != data.len() {
            return Err(DatasetError::InvalidSignal(format!(
                "{} channel names for {} data rows",
                channels.len(),
                data.len()
            )));
        }
        if !(sampling_rate_hz.is_finite() && sampling_rate_hz > 0.0) {
            return Err(DatasetError::InvalidSignal(format!(
                "sampling rate must be positive, got {sampling_rate_hz}"
            )));
        }
        if let Some(first) = data.first() {
            if let Some(bad) = data.iter().position(|row| row.len() != first.len()) {
                return Err(DatasetError::InvalidSignal(format!(
                    "channel {:?} has {} samples, expected {}",
                    channels[bad],
                    data[bad].len(),
                    first.len()
                )));
            }
        }
        Ok(Self {
            channels,
            data,
            sampling_rate_hz,
        })
    }

    /// Replace the sample rows, keeping names. Used by transforms that
    /// preserve the channel set.
    pub(crate) fn with_data(&self, data: Vec<Vec<f64>>, sampling_rate_hz: f64) -> Self {
        debug_assert_eq!(data.len(), self.channels.len());
        Self {
            channels: self.channels.clone(),
            data,
            sampling_rate_hz,
        }
    }

    pub fn channels(&self) -> &[String] {
        &self.channels
    }

    pub fn data(&self) -> &[Vec<f64>] {
        &self.data
    }

    pub fn channel(&self, index: usize) -> &[f64] {
        &self.data[index]
    }

    pub fn into_parts(self) -> (Vec<String>, Vec<Vec<f64>>, f64) {
        (self.channels, self.data, self.sampling_rate_hz)
    }

    pub fn sampling_rate_hz(&self) -> f64 {
        self.sampling_rate_hz
    }

    pub fn n_channels(&self) -> usize {
        self.channels.len()
    }

    pub fn n_samples(&self) -> usize {
        self.data.first().map_or(0, Vec::len)
    }

    pub fn duration_s(&self) -> f64 {
        self.n_samples() as f64 / self.sampling_rate_hz
    }
}

/// Encode as little-endian `f32`, channel-major.
pub fn write_signal_file(path: &Path, signal: &SignalBlock) -> Result<(), DatasetError> {
    if let Some(parent) = path.parent() {
        fs::create_dir_all(parent).map_err(|e| DatasetError::io(parent, e))?;
    }
    let mut bytes = Vec::with_capacity(signal.n_channels() * signal.n_samples() * 4);
    for row in signal.data() {
        for &v in row {
            bytes.extend_from_slice(&(v as f32).to_le_bytes());
        }
    }
    fs::write(path, bytes).map_err(|e| DatasetError::io(path, e))
}

pub fn read_signal_file(
    path: &Path,
    channels: Vec<String>,
    n_samples: usize,
    sampling_rate_hz: f64,
) -> Result<SignalBlock, DatasetError> {
    let bytes = fs::read(path).map_err(|e| DatasetError::io(path, e))?;
    let expected = (channels.len() * n_samples * 4) as u64;
    if bytes.len() as u64 != expected {
        return Err(DatasetError::LengthMismatch {
            path: path.to_path_buf(),
            expected,
            actual: bytes.len() as u64,
        });
    }
    let data = bytes
        .chunks_exact(n_samples * 4)
        .map(|row| {
            row.chunks_exact(4)
                .map(|b| f32::from_le_bytes([b[0], b[1], b[2], b[3]]) as f64)
                .collect()
        })
        .collect();
    SignalBlock::new(channels, data, sampling_rate_hz)
}

/// Read one trial, in manifest channel order.
pub fn read_trial_signal(
    manifest: &DatasetManifest,
    subject_id: &str,
    session_id: &str,
    trial_id: &str,
) -> Result<SignalBlock, DatasetError> {
    let key = TrialKey::new(subject_id, session_id, trial_id);
    let trial = manifest.trial(&key)?;
    read_signal_file(
        &manifest.root.join(&trial.signal_path),
        manifest.channel_names(),
        trial.n_samples,
        manifest.sampling_rate_hz,
    )
}
