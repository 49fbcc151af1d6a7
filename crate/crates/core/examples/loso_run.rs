//! A full leave-one-subject-out experiment from a TOML config: the MLP and
//! the majority baseline on the same synthetic data.
//!
//!     cargo run --release --example loso_run [-- path/to/config.toml]

use emoeval::{execute_run, ClassifierSpec, RunConfig};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let path = std::env::args().nth(1).unwrap_or_else(|| {
        concat!(env!("CARGO_MANIFEST_DIR"), "/configs/synthetic_loso.toml").to_string()
    });
    let mut config = RunConfig::load(&path)?;
    let out = std::env::temp_dir().join("emoeval-loso");
    config.logging.output_dir = out.join("mlp");

    let mlp = execute_run(&config)?;
    config.model = ClassifierSpec::MajorityBaseline;
    config.logging.output_dir = out.join("majority");
    let baseline = execute_run(&config)?;

    println!("{:<16}{:>20}{:>20}", "metric", "band-power MLP", "majority");
    for (name, m) in &mlp.aggregate.metrics {
        println!("{name:<16}{:>20}{:>20}", m.to_string(), baseline.aggregate.get(name).expect("same metrics").to_string());
    }
    println!("\nrun {} over {} folds", mlp.run_id, mlp.aggregate.n_folds);
    println!("summary {}", mlp.summary.display());
    Ok(())
}
