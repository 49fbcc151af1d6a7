//! Measured gain of the zero-phase band-pass and notch filters across
//! frequency, from the steady-state RMS of filtered pure tones.

use std::f64::consts::PI;

use emoeval::transform::{bandpass_butterworth, notch_filter};
use emoeval::SignalBlock;

fn tone(freq: f64, fs: f64, n: usize) -> SignalBlock {
    let x = (0..n).map(|i| (2.0 * PI * freq * i as f64 / fs).sin()).collect();
    SignalBlock::new(vec!["c".into()], vec![x], fs).unwrap()
}

fn gain_db(filtered: &SignalBlock, reference: &SignalBlock) -> f64 {
    let n = filtered.n_samples();
    let rms = |x: &[f64]| (x[n / 4..3 * n / 4].iter().map(|v| v * v).sum::<f64>() / (n / 2) as f64).sqrt();
    20.0 * (rms(filtered.channel(0)) / rms(reference.channel(0))).log10()
}

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let fs = 256.0;
    let n = 20 * 256;
    println!("{:>8}{:>16}{:>12}", "Hz", "band-pass dB", "notch dB");
    for freq in [0.1, 0.3, 1.0, 4.0, 10.0, 30.0, 45.0, 49.0, 50.0, 51.0, 60.0, 90.0, 120.0] {
        let x = tone(freq, fs, n);
        let bp = bandpass_butterworth(&x, 0.3, 45.0, 4)?;
        let notch = notch_filter(&x, 50.0, 30.0)?;
        println!("{freq:>8.1}{:>16.2}{:>12.2}", gain_db(&bp, &x), gain_db(&notch, &x));
    }
    Ok(())
}
