//! Log band-power features from a single Hann-windowed periodogram.

use std::f64::consts::PI;

use rustfft::num_complex::Complex;
use rustfft::FftPlanner;
use serde::{Deserialize, Serialize};

use super::ModelError;
use crate::dataset::SignalBlock;

/// Added to band power before the log so silent channels stay finite.
pub const LOG_FLOOR: f64 = 1e-12;

/// A frequency band, half-open `[lo_hz, hi_hz)`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Band {
    pub name: String,
    pub lo_hz: f64,
    pub hi_hz: f64,
}

impl Band {
    pub fn new(name: impl Into<String>, lo_hz: f64, hi_hz: f64) -> Self {
        Self {
            name: name.into(),
            lo_hz,
            hi_hz,
        }
    }
}

pub fn default_bands() -> Vec<Band> {
    vec![
        Band::new("delta", 0.5, 4.0),
        Band::new("theta", 4.0, 8.0),
        Band::new("alpha", 8.0, 13.0),
        Band::new("beta", 13.0, 30.0),
        Band::new("gamma", 30.0, 45.0),
    ]
}

pub fn check_bands(bands: &[Band]) -> Result<(), ModelError> {
    if bands.is_empty() {
        return Err(ModelError::Invalid("at least one band is required".into()));
    }
    let mut sorted: Vec<&Band> = bands.iter().collect();
    sorted.sort_by(|a, b| a.lo_hz.total_cmp(&b.lo_hz));
    for b in &sorted {
        if !(b.lo_hz >= 0.0 && b.hi_hz > b.lo_hz && b.hi_hz.is_finite()) {
            return Err(ModelError::Invalid(format!(
                "band {} has invalid edges [{}, {})",
                b.name, b.lo_hz, b.hi_hz
            )));
        }
    }
    for pair in sorted.windows(2) {
        if pair[1].lo_hz < pair[0].hi_hz {
            return Err(ModelError::Invalid(format!(
                "bands {} and {} overlap",
                pair[0].name, pair[1].name
            )));
        }
    }
    Ok(())
}

/// One-sided power spectral density of `x` (mean removed, periodic Hann
/// window), one value per bin `k · fs / n` for `k = 0..=n/2`.
pub fn periodogram(x: &[f64], fs: f64) -> Vec<f64> {
    let n = x.len();
    let mean = x.iter().sum::<f64>() / n as f64;
    let window: Vec<f64> = (0..n)
        .map(|i| 0.5 - 0.5 * (2.0 * PI * i as f64 / n as f64).cos())
        .collect();
    let mut buf: Vec<Complex<f64>> = x
        .iter()
        .zip(&window)
        .map(|(v, w)| Complex::new((v - mean) * w, 0.0))
        .collect();
    FftPlanner::new().plan_fft_forward(n).process(&mut buf);
    let scale = fs * window.iter().map(|w| w * w).sum::<f64>();
    (0..=n / 2)
        .map(|k| {
            let p = buf[k].norm_sqr() / scale;
            // Fold negative frequencies in, except DC and (even n) Nyquist.
            if k == 0 || (n.is_multiple_of(2) && k == n / 2) {
                p
            } else {
                2.0 * p
            }
        })
        .collect()
}

/// Per channel, per band: `ln(mean PSD over bins in band + LOG_FLOOR)`.
/// Channel-major, so the length is `n_channels × n_bands`.
pub fn bandpower_features(signal: &SignalBlock, bands: &[Band]) -> Result<Vec<f64>, ModelError> {
    let n = signal.n_samples();
    let fs = signal.sampling_rate_hz();
    if n < 2 || signal.n_channels() == 0 {
        return Err(ModelError::Invalid("cannot compute band power of an empty window".into()));
    }
    let nyquist = fs / 2.0;
    let resolution = fs / n as f64;
    let mut bins = Vec::with_capacity(bands.len());
    for b in bands {
        if b.hi_hz > nyquist {
            return Err(ModelError::BandAboveNyquist {
                band: b.name.clone(),
                hi_hz: b.hi_hz,
                nyquist_hz: nyquist,
            });
        }
        let lo = (b.lo_hz / resolution).ceil() as usize;
        let hi = ((b.hi_hz / resolution).ceil() as usize).min(n / 2 + 1);
        if lo >= hi {
            return Err(ModelError::Invalid(format!(
                "band {} holds no frequency bin at {resolution} Hz resolution",
                b.name
            )));
        }
        bins.push(lo..hi);
    }
    let mut out = Vec::with_capacity(signal.n_channels() * bands.len());
    for row in signal.data() {
        let psd = periodogram(row, fs);
        for r in &bins {
            let mean = psd[r.clone()].iter().sum::<f64>() / r.len() as f64;
            out.push((mean + LOG_FLOOR).ln());
        }
    }
    Ok(out)
}

/// Per-feature z-scoring with statistics taken from the training split.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Standardizer {
    pub mean: Vec<f64>,
    pub sd: Vec<f64>,
}

impl Standardizer {
    pub fn fit(rows: &[Vec<f64>]) -> Self {
        let dim = rows.first().map_or(0, Vec::len);
        let n = rows.len() as f64;
        let mut mean = vec![0.0; dim];
        for r in rows {
            for (m, v) in mean.iter_mut().zip(r) {
                *m += v;
            }
        }
        mean.iter_mut().for_each(|m| *m /= n);
        let mut sd = vec![0.0; dim];
        for r in rows {
            for ((s, v), m) in sd.iter_mut().zip(r).zip(&mean) {
                *s += (v - m).powi(2);
            }
        }
        // Constant features pass through centred but unscaled.
        sd.iter_mut()
            .for_each(|s| *s = if *s > 0.0 { (*s / n).sqrt() } else { 1.0 });
        Self { mean, sd }
    }

    pub fn apply(&self, row: &[f64]) -> Vec<f64> {
        row.iter()
            .zip(&self.mean)
            .zip(&self.sd)
            .map(|((v, m), s)| (v - m) / s)
            .collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    fn tone(freq: f64, fs: f64, n: usize, channels: usize) -> SignalBlock {
        let row: Vec<f64> = (0..n)
            .map(|i| (2.0 * PI * freq * i as f64 / fs).sin())
            .collect();
        SignalBlock::new(
            (0..channels).map(|c| format!("c{c}")).collect(),
            vec![row; channels],
            fs,
        )
        .unwrap()
    }

    #[test]
    fn ten_hz_lands_in_alpha() {
        let f = bandpower_features(&tone(10.0, 128.0, 512, 1), &default_bands()).unwrap();
        assert_eq!(f.len(), 5);
        for (i, v) in f.iter().enumerate() {
            if i != 2 {
                assert!(f[2] > *v, "alpha {} vs band {i} {v}", f[2]);
            }
        }
    }

    #[test]
    fn shape_and_floor() {
        let zero = SignalBlock::new(vec!["a".into(), "b".into()], vec![vec![0.0; 256]; 2], 128.0).unwrap();
        let f = bandpower_features(&zero, &default_bands()).unwrap();
        assert_eq!(f.len(), 10);
        for v in f {
            assert_eq!(v, LOG_FLOOR.ln());
        }
    }

    #[test]
    fn parseval_for_periodogram() {
        // Sum of one-sided PSD × resolution equals the windowed mean power
        // normalized by the window's mean square.
        let x: Vec<f64> = (0..200).map(|i| ((i * 7919) % 101) as f64 / 50.0 - 1.0).collect();
        let fs = 100.0;
        let n = x.len();
        let mean = x.iter().sum::<f64>() / n as f64;
        let w: Vec<f64> = (0..n)
            .map(|i| 0.5 - 0.5 * (2.0 * PI * i as f64 / n as f64).cos())
            .collect();
        let energy: f64 = x.iter().zip(&w).map(|(v, w)| ((v - mean) * w).powi(2)).sum();
        let expected = energy / w.iter().map(|w| w * w).sum::<f64>();
        let psd = periodogram(&x, fs);
        let total: f64 = psd.iter().sum::<f64>() * fs / n as f64;
        assert_relative_eq!(total, expected, max_relative = 1e-12);
    }

    #[test]
    fn band_errors() {
        let s = tone(10.0, 64.0, 256, 1);
        assert!(matches!(
            bandpower_features(&s, &default_bands()),
            Err(ModelError::BandAboveNyquist { .. })
        ));
        assert!(check_bands(&[Band::new("a", 1.0, 5.0), Band::new("b", 4.0, 8.0)]).is_err());
        assert!(check_bands(&default_bands()).is_ok());
    }

    #[test]
    fn standardizer_uses_population_sd() {
        let rows = vec![vec![1.0, 5.0], vec![3.0, 5.0]];
        let s = Standardizer::fit(&rows);
        assert_eq!(s.apply(&[1.0, 5.0]), vec![-1.0, 0.0]);
        assert_eq!(s.apply(&[3.0, 6.0]), vec![1.0, 1.0]);
    }
}
