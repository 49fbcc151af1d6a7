//! Train the band-power MLP directly on features from labeled alpha-effect
//! trials, printing the per-epoch history and the selected epoch.

use emoeval::dataset::{SyntheticSpec, TrialKey};
use emoeval::models::{bandpower_features, default_bands, train_mlp, Standardizer};
use emoeval::{generate_synthetic, read_trial_signal, GroundTruthScheme, TrainingSpec};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let dir = std::env::temp_dir().join("emoeval-train");
    let manifest = generate_synthetic(&SyntheticSpec::alpha_effect(4, 12, 4, 8.0, 128.0, 5), &dir)?;
    let scheme = GroundTruthScheme::binary(emoeval::dataset::Dimension::Valence, 4.5);
    let bands = default_bands();

    let mut rows = Vec::new();
    let mut labels = Vec::new();
    let mut subjects = Vec::new();
    for (key, record) in manifest.trials() {
        let TrialKey { subject_id, session_id, trial_id } = &key;
        let signal = read_trial_signal(&manifest, subject_id, session_id, trial_id)?;
        rows.push(bandpower_features(&signal, &bands)?);
        labels.push(scheme.label(&record.label)?.index);
        subjects.push(subject_id.clone());
    }
    // The last subject validates.
    let held_out = subjects.last().unwrap().clone();
    let (mut tx, mut ty, mut vx, mut vy) = (vec![], vec![], vec![], vec![]);
    for ((x, y), s) in rows.into_iter().zip(labels).zip(&subjects) {
        if *s == held_out {
            vx.push(x);
            vy.push(y);
        } else {
            tx.push(x);
            ty.push(y);
        }
    }
    let z = Standardizer::fit(&tx);
    let tx: Vec<_> = tx.iter().map(|r| z.apply(r)).collect();
    let vx: Vec<_> = vx.iter().map(|r| z.apply(r)).collect();

    let spec = TrainingSpec {
        epochs: 40,
        batch_size: 8,
        seed: 7,
        ..TrainingSpec::default()
    };
    let fit = train_mlp(&tx, &ty, &vx, &vy, &[32, 32], 2, &spec)?;
    for h in fit.history.iter().step_by(5) {
        println!("epoch {:>3}  loss {:.4}  val acc {:.3}", h.epoch, h.train_loss, h.val_accuracy);
    }
    println!(
        "selected epoch {} with validation accuracy {:.3}",
        fit.selected_epoch, fit.history[fit.selected_epoch].val_accuracy
    );
    Ok(())
}
