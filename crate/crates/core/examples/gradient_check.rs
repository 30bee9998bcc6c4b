//! Finite-difference check of the backward pass on random small pathways,
//! for a softmax classifier, a sigmoid unit and a regression output.

use oodfdd::nn::{check_pathway, Activation, Matrix, Pathway, Rng, Target};

fn main() -> oodfdd::Result<()> {
    let mut rng = Rng::seed(3);
    let x = Matrix::from_rows(&(0..8).map(|_| (0..4).map(|_| rng.normal()).collect()).collect::<Vec<Vec<f64>>>())?;
    let cases = [
        ("softmax", vec![4, 6, 5, 3], Activation::Softmax, Target::Classes((0..8).map(|i| i % 3).collect())),
        ("sigmoid", vec![4, 5, 1], Activation::Sigmoid, Target::Classes((0..8).map(|i| i % 2).collect())),
        (
            "regression",
            vec![4, 3, 4],
            Activation::Identity,
            Target::Values(x.map(|v| 0.5 * v)),
        ),
    ];
    for (name, widths, output, target) in cases {
        let net = Pathway::mlp(&widths, Activation::Relu, output, None, &mut rng)?;
        let check = check_pathway(&net, &x, &target, 1e-6)?;
        println!(
            "{name:10} {} parameters, max relative error {:.2e}",
            net.param_count(),
            check.max_rel_error
        );
    }
    Ok(())
}
