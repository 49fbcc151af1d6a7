//! How self-reported ratings become class labels: binary thresholds,
//! valence/arousal quadrants, and what the threshold does to class balance.

use emoeval::dataset::Dimension;
use emoeval::labeling::{binarize, quadrantize, RatingScale};
use emoeval::GroundTruthScheme;

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let scale = RatingScale::new(1.0, 9.0);
    let ratings = [1.0, 3.5, 4.0, 4.5, 5.0, 5.01, 7.0, 9.0];
    println!("{:>8}{:>14}{:>14}", "rating", "threshold 5", "threshold 4");
    for r in ratings {
        println!(
            "{r:>8}{:>14}{:>14}",
            binarize(r, 5.0, scale)?.name,
            binarize(r, 4.0, scale)?.name
        );
    }

    println!();
    for (v, a) in [(2.0, 2.0), (2.0, 8.0), (8.0, 2.0), (8.0, 8.0)] {
        let label = quadrantize(v, a, 5.0, 5.0, scale)?;
        println!("valence {v}, arousal {a} -> {} ({})", label.name, label.index);
    }

    // The same ratings split at different thresholds give different balance.
    let sample: Vec<f64> = (0..200).map(|i| 1.0 + 8.0 * ((i * 37 % 200) as f64 / 199.0).powf(0.8)).collect();
    for threshold in [4.0, 5.0, 6.0] {
        let high = sample
            .iter()
            .filter(|&&r| binarize(r, threshold, scale).map(|l| l.index == 1).unwrap_or(false))
            .count();
        println!("threshold {threshold}: {:.1}% high", 100.0 * high as f64 / sample.len() as f64);
    }

    let scheme = GroundTruthScheme::binary(Dimension::Arousal, 5.0);
    println!("\nrecorded in summaries as:\n{}", serde_json::to_string_pretty(&scheme)?);
    Ok(())
}
