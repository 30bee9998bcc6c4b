//! Threshold calibration on synthetic normal scores, then label sets,
//! detection flags and diagnostic accuracy for a few score vectors.

use oodfdd::detect::{calibrate_thresholds, diagnostic_accuracy, predict_labels, AnomalyScores};
use oodfdd::nn::{Matrix, Rng};

fn main() -> oodfdd::Result<()> {
    let mut rng = Rng::seed(11);
    let rows: Vec<Vec<f64>> = (0..2000)
        .map(|_| {
            let s0 = 0.1 + 0.05 * rng.normal().abs();
            vec![s0, 0.05 + 0.04 * rng.normal().abs(), 0.05 + 0.04 * rng.normal().abs()]
        })
        .collect();
    let scores = AnomalyScores {
        clf: Some(Matrix::from_rows(&rows)?),
        rec: Some((0..2000).map(|_| rng.normal().powi(2)).collect()),
    };
    for alpha in [0.05, 0.1] {
        let t = calibrate_thresholds(&scores, alpha)?;
        let clf = t.clf.as_ref().expect("classifier thresholds");
        let rec = t.rec.expect("reconstruction threshold");
        let flagged = scores.rec.as_ref().unwrap().iter().filter(|&&s| s > rec).count();
        println!("alpha {alpha}: thresholds {clf:.4?}, rec {rec:.4}, rec flag rate {:.3}", flagged as f64 / 2000.0);
    }

    let t = calibrate_thresholds(&scores, 0.05)?;
    let thresholds = t.clf.unwrap();
    for (s, y) in [([0.12, 0.06, 0.05], 1), ([0.2, 0.5, 0.06], 1), ([0.3, 0.5, 0.4], 2), ([0.3, 0.05, 0.05], 2)] {
        let p = predict_labels(&s, &thresholds)?;
        println!(
            "scores {s:?}: labels {:?}, fault flagged {}, diagnostic accuracy for class {y}: {:.3}",
            p.labels,
            p.z,
            diagnostic_accuracy(&p.labels, y)?
        );
    }
    Ok(())
}
