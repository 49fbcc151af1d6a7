//! Fold plans for each splitting scheme on a small synthetic dataset, and
//! the disjointness check every plan passes.

use emoeval::dataset::SyntheticSpec;
use emoeval::splitting::{plan_folds, verify_disjoint};
use emoeval::{generate_synthetic, SplitScheme};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let dir = std::env::temp_dir().join("emoeval-folds");
    let mut spec = SyntheticSpec::alpha_effect(5, 3, 2, 4.0, 128.0, 9);
    spec.n_sessions_per_subject = 2;
    let manifest = generate_synthetic(&spec, &dir)?;

    for scheme in [
        SplitScheme::Loso,
        SplitScheme::Lkso { k: 2 },
        SplitScheme::Loto,
        SplitScheme::LeaveOneSessionOut,
    ] {
        let folds = plan_folds(&manifest, &scheme)?;
        let check = verify_disjoint(&folds);
        println!("{scheme}: {} folds, disjoint: {}", folds.len(), check.ok);
        for fold in folds.iter().take(3) {
            let test: Vec<String> = fold.test_units.iter().map(|u| u.to_string()).collect();
            let scope = fold.scope.as_ref().map(|s| format!(" ({s})")).unwrap_or_default();
            println!(
                "  fold {}{scope}: {} train units, test {}",
                fold.fold_index,
                fold.train_units.len(),
                test.join(" ")
            );
        }
    }
    Ok(())
}
