//! Polyphase resampling of a 10 Hz tone from common native rates to 128 Hz,
//! with the output length and recovered amplitude.

use std::f64::consts::PI;

use emoeval::transform::resample;
use emoeval::SignalBlock;

fn main() -> Result<(), Box<dyn std::error::Error>> {
    for fs_in in [1000.0, 512.0, 256.0, 200.0, 128.0] {
        let n = (10.0 * fs_in) as usize;
        let x = (0..n).map(|i| (2.0 * PI * 10.0 * i as f64 / fs_in).sin()).collect();
        let block = SignalBlock::new(vec!["c".into()], vec![x], fs_in)?;
        let y = resample(&block, 128.0)?;
        let out = y.channel(0);
        // Amplitude from the RMS of the middle, away from edge transients.
        let mid = &out[out.len() / 4..3 * out.len() / 4];
        let amplitude = (2.0 * mid.iter().map(|v| v * v).sum::<f64>() / mid.len() as f64).sqrt();
        println!(
            "{fs_in:>6} Hz, {n:>5} samples -> {:>4} samples at {} Hz, amplitude {amplitude:.5}",
            y.n_samples(),
            y.sampling_rate_hz()
        );
    }
    Ok(())
}
