//! Polyphase rational resampling.
//!
//! The rate change `fs_out / fs_in` is reduced to `L / M`. A Kaiser-windowed
//! sinc prototype low-pass runs at the virtual rate `fs_in · L` with cutoff
//! `0.9 · min(fs_in, fs_out) / 2`; only the taps that meet non-zero
//! upsampled inputs are evaluated.

use std::f64::consts::PI;

use super::TransformError;
use crate::dataset::SignalBlock;

pub const MAX_RATIO_TERM: usize = 1024;
pub const KAISER_BETA: f64 = 8.6;
/// Prototype length is `TAPS_PER_PHASE · max(L, M) + 1`.
pub const TAPS_PER_PHASE: usize = 64;
pub const CUTOFF_FRACTION: f64 = 0.9;

/// Modified Bessel function of the first kind, order zero (power series).
pub fn bessel_i0(x: f64) -> f64 {
    let q = x * x / 4.0;
    let mut term = 1.0;
    let mut sum = 1.0;
    let mut k = 1.0;
    while term > sum * 1e-17 {
        term *= q / (k * k);
        sum += term;
        k += 1.0;
    }
    sum
}

pub fn kaiser_window(len: usize, beta: f64) -> Vec<f64> {
    if len == 1 {
        return vec![1.0];
    }
    let denom = bessel_i0(beta);
    let m = (len - 1) as f64;
    (0..len)
        .map(|i| {
            let r = 2.0 * i as f64 / m - 1.0;
            bessel_i0(beta * (1.0 - r * r).max(0.0).sqrt()) / denom
        })
        .collect()
}

fn gcd(a: usize, b: usize) -> usize {
    if b == 0 {
        a
    } else {
        gcd(b, a % b)
    }
}

/// Reduced `(L, M)` with `fs_out / fs_in = L / M` and both terms at most
/// [`MAX_RATIO_TERM`].
pub fn rational_ratio(fs_in: f64, fs_out: f64) -> Result<(usize, usize), TransformError> {
    if !(fs_in > 0.0 && fs_out > 0.0 && fs_in.is_finite() && fs_out.is_finite()) {
        return Err(TransformError::Invalid(format!(
            "sampling rates must be positive, got {fs_in} -> {fs_out}"
        )));
    }
    let ratio = fs_out / fs_in;
    for m in 1..=MAX_RATIO_TERM {
        let l = (ratio * m as f64).round();
        if l < 1.0 || l > MAX_RATIO_TERM as f64 {
            continue;
        }
        if ((l / m as f64) - ratio).abs() <= 1e-12 * ratio {
            let l = l as usize;
            let g = gcd(l, m);
            return Ok((l / g, m / g));
        }
    }
    Err(TransformError::RatioTooComplex { fs_in, fs_out })
}

#[derive(Clone, Debug)]
pub struct Resampler {
    up: usize,
    down: usize,
    taps: Vec<f64>,
}

impl Resampler {
    pub fn new(fs_in: f64, fs_out: f64) -> Result<Self, TransformError> {
        let (up, down) = rational_ratio(fs_in, fs_out)?;
        let len = TAPS_PER_PHASE * up.max(down) + 1;
        let centre = (len - 1) as f64 / 2.0;
        // Cutoff in cycles per sample at the upsampled rate.
        let fc = CUTOFF_FRACTION * fs_in.min(fs_out) / 2.0 / (fs_in * up as f64);
        let window = kaiser_window(len, KAISER_BETA);
        let mut taps: Vec<f64> = window
            .iter()
            .enumerate()
            .map(|(i, w)| {
                let t = i as f64 - centre;
                let sinc = if t == 0.0 {
                    2.0 * fc
                } else {
                    (2.0 * PI * fc * t).sin() / (PI * t)
                };
                sinc * w
            })
            .collect();
        // Unit DC gain on every polyphase branch.
        for phase in 0..up {
            let sum: f64 = taps.iter().skip(phase).step_by(up).sum();
            for t in taps.iter_mut().skip(phase).step_by(up) {
                *t /= sum;
            }
        }
        Ok(Self { up, down, taps })
    }

    pub fn ratio(&self) -> (usize, usize) {
        (self.up, self.down)
    }

    pub fn taps(&self) -> &[f64] {
        &self.taps
    }

    pub fn output_len(&self, n_in: usize) -> usize {
        n_in * self.up / self.down
    }

    pub fn process(&self, x: &[f64]) -> Vec<f64> {
        let n_out = self.output_len(x.len());
        if self.up == 1 && self.down == 1 {
            return x.to_vec();
        }
        let len = self.taps.len() as isize;
        let delay = (len - 1) / 2;
        let up = self.up as isize;
        (0..n_out as isize)
            .map(|m| {
                let t = m * self.down as isize + delay;
                // Inputs n with 0 <= t - n·L < len.
                let n_hi = t.div_euclid(up);
                let n_lo = (t - len + 1 + up - 1).div_euclid(up);
                (n_lo..=n_hi)
                    .map(|n| self.taps[(t - n * up) as usize] * reflect(x, n))
                    .sum()
            })
            .collect()
    }
}

/// Odd reflection about the end samples, clamped for very short inputs.
fn reflect(x: &[f64], i: isize) -> f64 {
    let n = x.len() as isize;
    if i < 0 {
        let j = (-i).min(n - 1);
        2.0 * x[0] - x[j as usize]
    } else if i >= n {
        let j = (2 * (n - 1) - i).max(0);
        2.0 * x[(n - 1) as usize] - x[j as usize]
    } else {
        x[i as usize]
    }
}

pub fn resample(signal: &SignalBlock, fs_out_hz: f64) -> Result<SignalBlock, TransformError> {
    let fs_in = signal.sampling_rate_hz();
    let resampler = Resampler::new(fs_in, fs_out_hz)?;
    if resampler.ratio() == (1, 1) {
        return Ok(signal.clone());
    }
    if signal.n_samples() == 0 {
        return Err(TransformError::Invalid("cannot resample an empty signal".into()));
    }
    let data = signal.data().iter().map(|row| resampler.process(row)).collect();
    Ok(signal.with_data(data, fs_out_hz))
}
