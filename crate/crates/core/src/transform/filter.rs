//! IIR filter design and zero-phase application.
//!
//! Filters are cascades of second-order sections in transposed direct form
//! II. [`filtfilt`] runs the cascade forward and backward with odd-reflection
//! padding and steady-state initial conditions, so output length equals input
//! length and the phase response is zero.

use std::f64::consts::PI;

use num_complex::Complex64;

use super::TransformError;
use crate::dataset::SignalBlock;

/// Default notch quality factor (about 1.7 Hz bandwidth at 50 Hz).
pub const DEFAULT_NOTCH_Q: f64 = 30.0;
/// Default Butterworth design order.
pub const DEFAULT_BANDPASS_ORDER: usize = 4;

/// Relative level at which the impulse response counts as decayed.
const IR_DECAY: f64 = 1e-3;
/// Upper bound on the padding estimate for near-unit-circle poles.
const MAX_IR_LEN: usize = 1 << 16;

/// One second-order section, normalized so that `a0 = 1`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Biquad {
    pub b: [f64; 3],
    pub a: [f64; 2],
}

impl Biquad {
    pub fn dc_gain(&self) -> f64 {
        (self.b[0] + self.b[1] + self.b[2]) / (1.0 + self.a[0] + self.a[1])
    }

    /// Complex response at `omega` radians/sample.
    pub fn response(&self, omega: f64) -> Complex64 {
        let z1 = Complex64::from_polar(1.0, -omega);
        let z2 = z1 * z1;
        (self.b[0] + self.b[1] * z1 + self.b[2] * z2) / (1.0 + self.a[0] * z1 + self.a[1] * z2)
    }

    /// Largest pole magnitude.
    fn pole_radius(&self) -> f64 {
        let disc = Complex64::new(self.a[0] * self.a[0] - 4.0 * self.a[1], 0.0).sqrt();
        let r1 = ((-self.a[0] + disc) / 2.0).norm();
        let r2 = ((-self.a[0] - disc) / 2.0).norm();
        r1.max(r2)
    }

    /// Transposed direct-form II state after unit constant input forever.
    fn steady_state(&self) -> [f64; 2] {
        let g = self.dc_gain();
        let z2 = self.b[2] - self.a[1] * g;
        let z1 = self.b[1] - self.a[0] * g + z2;
        [z1, z2]
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct Sos {
    pub sections: Vec<Biquad>,
}

impl Sos {
    pub fn response(&self, omega: f64) -> Complex64 {
        self.sections
            .iter()
            .map(|s| s.response(omega))
            .product()
    }

    /// Magnitude response at `freq_hz` for sampling rate `fs`.
    pub fn magnitude_at(&self, freq_hz: f64, fs: f64) -> f64 {
        self.response(2.0 * PI * freq_hz / fs).norm()
    }

    /// Samples until the slowest pole decays to `IR_DECAY` of its start.
    pub fn significant_length(&self) -> usize {
        let r = self
            .sections
            .iter()
            .map(Biquad::pole_radius)
            .fold(0.0, f64::max);
        if r <= 0.0 {
            return 3;
        }
        if r >= 1.0 {
            return MAX_IR_LEN;
        }
        ((IR_DECAY.ln() / r.ln()).ceil() as usize).clamp(3, MAX_IR_LEN)
    }

    /// Per-section states for a constant input of `level`.
    fn steady_states(&self, level: f64) -> Vec<[f64; 2]> {
        let mut input = level;
        self.sections
            .iter()
            .map(|s| {
                let zi = s.steady_state();
                let state = [zi[0] * input, zi[1] * input];
                input *= s.dc_gain();
                state
            })
            .collect()
    }

    fn run(&self, x: &mut [f64], states: &mut [[f64; 2]]) {
        for (s, z) in self.sections.iter().zip(states.iter_mut()) {
            for v in x.iter_mut() {
                let input = *v;
                let y = s.b[0] * input + z[0];
                z[0] = s.b[1] * input - s.a[0] * y + z[1];
                z[1] = s.b[2] * input - s.a[1] * y;
                *v = y;
            }
        }
    }

    /// Single causal pass from rest.
    pub fn filter(&self, x: &[f64]) -> Vec<f64> {
        let mut out = x.to_vec();
        let mut states = vec![[0.0; 2]; self.sections.len()];
        self.run(&mut out, &mut states);
        out
    }
}

/// Second-order IIR notch at `f0_hz` with quality factor `q`.
pub fn design_notch(f0_hz: f64, q: f64, fs: f64) -> Result<Sos, TransformError> {
    let nyquist = fs / 2.0;
    if !(f0_hz > 0.0 && f0_hz < nyquist) {
        return Err(TransformError::AboveNyquist {
            what: "notch frequency",
            freq_hz: f0_hz,
            nyquist_hz: nyquist,
        });
    }
    if !(q > 0.0 && q.is_finite()) {
        return Err(TransformError::Invalid(format!(
            "notch quality factor must be positive, got {q}"
        )));
    }
    let w0 = 2.0 * PI * f0_hz / fs;
    let bw = w0 / q;
    let gain = 1.0 / (1.0 + (bw / 2.0).tan());
    let c = w0.cos();
    Ok(Sos {
        sections: vec![Biquad {
            b: [gain, -2.0 * gain * c, gain],
            a: [-2.0 * gain * c, 2.0 * gain - 1.0],
        }],
    })
}

/// Butterworth band-pass built from an analog prototype of `order` poles
/// (so the band-pass has `2·order` poles), mapped with a pre-warped bilinear
/// transform. `order` must be even; each prototype conjugate pair yields two
/// sections.
pub fn design_butter_bandpass(
    lo_hz: f64,
    hi_hz: f64,
    order: usize,
    fs: f64,
) -> Result<Sos, TransformError> {
    let nyquist = fs / 2.0;
    if !(lo_hz > 0.0 && lo_hz < hi_hz) {
        return Err(TransformError::Invalid(format!(
            "band-pass edges must satisfy 0 < lo < hi, got [{lo_hz}, {hi_hz}]"
        )));
    }
    if hi_hz >= nyquist {
        return Err(TransformError::AboveNyquist {
            what: "band-pass upper edge",
            freq_hz: hi_hz,
            nyquist_hz: nyquist,
        });
    }
    if order == 0 || !order.is_multiple_of(2) {
        return Err(TransformError::Invalid(format!(
            "band-pass order must be a positive even integer, got {order}"
        )));
    }

    let k = 2.0 * fs;
    let w_lo = k * (PI * lo_hz / fs).tan();
    let w_hi = k * (PI * hi_hz / fs).tan();
    let bw = w_hi - w_lo;
    let w0_sq = w_lo * w_hi;
    let to_z = |s: Complex64| (k + s) / (k - s);

    let n = order as f64;
    let mut sections = Vec::with_capacity(order);
    for i in 1..=order {
        let p = Complex64::from_polar(1.0, PI * (2.0 * i as f64 + n - 1.0) / (2.0 * n));
        if p.im <= 0.0 {
            continue;
        }
        let half = p * (bw / 2.0);
        let root = (half * half - w0_sq).sqrt();
        for s in [half + root, half - root] {
            let z = to_z(s);
            sections.push(Biquad {
                b: [1.0, 0.0, -1.0],
                a: [-2.0 * z.re, z.norm_sqr()],
            });
        }
    }

    // Unity gain at the band centre (the analog geometric centre).
    let mut sos = Sos { sections };
    let omega_c = 2.0 * (w0_sq.sqrt() / k).atan();
    let g = sos.response(omega_c).norm().recip().powf(1.0 / sos.sections.len() as f64);
    for s in &mut sos.sections {
        for b in &mut s.b {
            *b *= g;
        }
    }
    Ok(sos)
}

/// Zero-phase forward-backward filtering.
pub fn filtfilt(sos: &Sos, x: &[f64]) -> Vec<f64> {
    let n = x.len();
    if n < 2 {
        let mut y = x.to_vec();
        for _ in 0..2 {
            let mut states = sos.steady_states(y.first().copied().unwrap_or(0.0));
            sos.run(&mut y, &mut states);
        }
        return y;
    }
    let pad = (3 * sos.significant_length()).min(n - 1);
    let mut ext = Vec::with_capacity(n + 2 * pad);
    ext.extend((1..=pad).rev().map(|i| 2.0 * x[0] - x[i]));
    ext.extend_from_slice(x);
    ext.extend((1..=pad).map(|i| 2.0 * x[n - 1] - x[n - 1 - i]));

    let mut states = sos.steady_states(ext[0]);
    sos.run(&mut ext, &mut states);
    ext.reverse();
    let mut states = sos.steady_states(ext[0]);
    sos.run(&mut ext, &mut states);
    ext.reverse();
    ext[pad..pad + n].to_vec()
}

fn apply(signal: &SignalBlock, sos: &Sos) -> SignalBlock {
    let data = signal.data().iter().map(|row| filtfilt(sos, row)).collect();
    signal.with_data(data, signal.sampling_rate_hz())
}

/// Remove a narrow band around `f0_hz` from every channel, zero-phase.
pub fn notch_filter(signal: &SignalBlock, f0_hz: f64, q: f64) -> Result<SignalBlock, TransformError> {
    let sos = design_notch(f0_hz, q, signal.sampling_rate_hz())?;
    Ok(apply(signal, &sos))
}

/// Butterworth band-pass every channel, zero-phase.
pub fn bandpass_butterworth(
    signal: &SignalBlock,
    lo_hz: f64,
    hi_hz: f64,
    order: usize,
) -> Result<SignalBlock, TransformError> {
    let sos = design_butter_bandpass(lo_hz, hi_hz, order, signal.sampling_rate_hz())?;
    Ok(apply(signal, &sos))
}
