//! Run a shipped pre-processing preset on one synthetic trial and show what
//! each window looks like.

use emoeval::dataset::{SyntheticSpec, TrialKey};
use emoeval::transform::apply_pipeline;
use emoeval::{generate_synthetic, read_trial_signal, GroundTruthScheme, TransformSpec};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let dir = std::env::temp_dir().join("emoeval-preprocess");
    // Fourteen channels at 128 Hz, the layout the "dreamer" preset expects.
    let spec = SyntheticSpec::alpha_effect(1, 1, 14, 30.0, 128.0, 3);
    let manifest = generate_synthetic(&spec, &dir)?;
    let (key, record): (TrialKey, _) = manifest.trials().next().expect("one trial");
    let signal = read_trial_signal(&manifest, &key.subject_id, &key.session_id, &key.trial_id)?;
    let label = GroundTruthScheme::binary(emoeval::dataset::Dimension::Valence, 4.5).label(&record.label)?;

    let recipe = TransformSpec::preset("dreamer")?;
    for (i, step) in recipe.steps.iter().enumerate() {
        println!("step {i}: {step:?}");
    }
    let windows = apply_pipeline(&key, &signal, &label, &recipe)?;
    println!(
        "{key}: {} samples x {} channels -> {} windows labeled {:?}",
        signal.n_samples(),
        signal.n_channels(),
        windows.len(),
        label.name
    );
    for w in windows.iter().take(3) {
        let ch = w.signal.channel(0);
        let mean = ch.iter().sum::<f64>() / ch.len() as f64;
        println!(
            "  window {}: {} samples at {} Hz, channel {} mean {mean:+.3}",
            w.window_index,
            w.signal.n_samples(),
            w.signal.sampling_rate_hz(),
            w.signal.channels()[0]
        );
    }
    Ok(())
}
