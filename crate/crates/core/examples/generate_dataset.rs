//! Write a small synthetic dataset, reload it from its manifest, validate it
//! and print its summary.
//!
//!     cargo run --example generate_dataset -- /tmp/synthetic

use emoeval::dataset::SyntheticSpec;
use emoeval::{dataset_summary, generate_synthetic, load_manifest, validate_manifest, GroundTruthScheme};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let out = std::env::args()
        .nth(1)
        .map(std::path::PathBuf::from)
        .unwrap_or_else(|| std::env::temp_dir().join("emoeval-synthetic"));
    let spec = SyntheticSpec::alpha_effect(6, 10, 8, 20.0, 128.0, 42);
    generate_synthetic(&spec, &out)?;

    let manifest = load_manifest(&out)?;
    let report = validate_manifest(&manifest, &manifest.root);
    println!("{} trials checked, {} findings", report.trials_checked, report.findings.len());

    let scheme = GroundTruthScheme::binary(emoeval::dataset::Dimension::Valence, 4.5);
    print!("{}", dataset_summary(&manifest, Some(&scheme))?);
    println!("written to {}", out.display());
    Ok(())
}
