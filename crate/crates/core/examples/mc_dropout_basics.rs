//! MC dropout on a freshly built augmented network: predictive mean and
//! variance of the class probabilities, reconstruction mean, and the
//! resulting anomaly scores for one input.

use oodfdd::detect::{clf_scores_of, rec_anomaly_score};
use oodfdd::model::{Architecture, ModelKind, PathwayNetwork};
use oodfdd::nn::{Activation, Matrix, Rng};
use oodfdd::uncertainty::{mc_sample, mc_sample_one};

fn main() -> oodfdd::Result<()> {
    let arch = Architecture {
        input_dim: 6,
        latent_dim: 2,
        hidden_widths: vec![5, 3],
        head_widths: vec![8],
        dropout_rate: 0.2,
        n_classes: 3,
        decoder_output: Activation::Identity,
    };
    let net = PathwayNetwork::build(ModelKind::Augmented, &arch, &mut Rng::seed(1))?;
    let x = [0.3, -1.0, 0.5, 0.0, 1.2, -0.4];

    for t in [10, 100, 1000] {
        let pred = mc_sample_one(&net, &x, t, &mut Rng::seed(7))?;
        println!("T = {t:4}: mean {:.4?} variance {:.5?}", pred.mean, pred.variance);
    }

    let pred = mc_sample_one(&net, &x, 100, &mut Rng::seed(7))?;
    println!("classifier scores s_j: {:.4?}", clf_scores_of(&pred));

    let batch = mc_sample(&net, &Matrix::row_vector(&x), 100, &mut Rng::seed(7))?;
    if let Some(rec) = &batch.reconstruction_mean {
        println!("reconstruction mean: {:.4?}", rec.row(0));
        println!("reconstruction score: {:.4}", rec_anomaly_score(rec.row(0), &x)?);
    }
    Ok(())
}
