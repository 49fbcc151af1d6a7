//! Metrics from predictions: confusion matrix, per-class scores, MCC and
//! kappa, then mean ± std across folds.

use emoeval::metrics::{aggregate, confusion_matrix};
use emoeval::MetricReport;

fn main() -> Result<(), Box<dyn std::error::Error>> {
    // 60 low and 40 high trials; 50 + 35 classified correctly.
    let mut truth = vec![0; 60];
    truth.extend([1; 40]);
    let mut pred = vec![0; 50];
    pred.extend([1; 10]);
    pred.extend([0; 5]);
    pred.extend([1; 35]);

    let cm = confusion_matrix(&truth, &pred, 2)?;
    println!("confusion (rows true, columns predicted): {:?}", cm.counts);
    let report = MetricReport::from_confusion(cm)?;
    for (name, value) in report.scalars() {
        println!("{name:<12}{value:.4}");
    }

    // A constant predictor looks fine by accuracy and reveals itself by MCC.
    let constant = MetricReport::from_labels(&truth, &[0; 100], 2)?;
    println!("\nalways-low: accuracy {:.2}, mcc {:.2}, kappa {:.2}", constant.accuracy, constant.mcc, constant.kappa);

    let folds = vec![report, constant, MetricReport::from_labels(&[0, 1, 1, 0], &[0, 1, 0, 0], 2)?];
    let agg = aggregate(&folds)?;
    println!("\nacross {} folds:", agg.n_folds);
    for (name, m) in &agg.metrics {
        println!("{name:<12}{m}");
    }
    Ok(())
}
