//! Central-difference gradient checking.

use crate::error::{Error, Result};

use super::layers::{Activation, Sampling};
use super::loss::{binary_cross_entropy, cross_entropy, mse};
use super::pathway::{flatten_grads, GradAt, Pathway};
use super::{Matrix, Rng};

/// Outcome of comparing an analytic gradient against central differences.
#[derive(Clone, Debug)]
pub struct GradCheck {
    pub max_rel_error: f64,
    pub worst_index: usize,
    pub analytic: Vec<f64>,
    pub numeric: Vec<f64>,
}

/// Gradients smaller than this are compared in absolute terms, otherwise
/// rounding noise in the loss (~1e-16 · |L| / eps) dominates the ratio.
pub const REL_ERROR_FLOOR: f64 = 1e-3;

pub fn relative_error(a: f64, b: f64) -> f64 {
    (a - b).abs() / a.abs().max(b.abs()).max(REL_ERROR_FLOOR)
}

/// Checks `objective`'s analytic gradient at `params` against central
/// differences with step `eps`.
///
/// `objective` maps a parameter vector to `(loss, gradient)`.
pub fn gradient_check<F>(params: &[f64], eps: f64, objective: F) -> Result<GradCheck>
where
    F: Fn(&[f64]) -> Result<(f64, Vec<f64>)>,
{
    if eps <= 0.0 {
        return Err(Error::invalid("gradient check step must be positive"));
    }
    let (_, analytic) = objective(params)?;
    if analytic.len() != params.len() {
        return Err(Error::shape("gradient_check", params.len(), analytic.len()));
    }
    let mut probe = params.to_vec();
    let mut numeric = Vec::with_capacity(params.len());
    for k in 0..params.len() {
        probe[k] = params[k] + eps;
        let (plus, _) = objective(&probe)?;
        probe[k] = params[k] - eps;
        let (minus, _) = objective(&probe)?;
        probe[k] = params[k];
        numeric.push((plus - minus) / (2.0 * eps));
    }
    let (worst_index, max_rel_error) = analytic
        .iter()
        .zip(&numeric)
        .map(|(&a, &n)| relative_error(a, n))
        .enumerate()
        .fold((0, 0.0), |acc, (i, e)| if e > acc.1 { (i, e) } else { acc });
    Ok(GradCheck {
        max_rel_error,
        worst_index,
        analytic,
        numeric,
    })
}

/// Supervision for [`check_pathway`].
#[derive(Clone, Debug)]
pub enum Target {
    /// Class labels; the pathway must end in softmax or a single sigmoid unit.
    Classes(Vec<usize>),
    /// Regression targets scored by mean squared error.
    Values(Matrix),
}

/// Loss and flat parameter gradient of a pathway in deterministic mode.
pub fn pathway_loss_and_grad(net: &Pathway, x: &Matrix, target: &Target) -> Result<(f64, Vec<f64>)> {
    let mut rng = Rng::seed(0);
    let trace = net.forward_traced(x, &mut rng, Sampling::Deterministic)?;
    let out = trace.output();
    let (loss, grad, at) = match target {
        Target::Values(y) => {
            let (l, g) = mse(out, y)?;
            (l, g, GradAt::Output)
        }
        Target::Classes(labels) => {
            let (l, g) = match net.output_activation() {
                Some(Activation::Softmax) => cross_entropy(out, labels)?,
                Some(Activation::Sigmoid) if net.output_dim() == 1 => binary_cross_entropy(out, labels)?,
                _ => return Err(Error::invalid("class targets need a softmax or single sigmoid output")),
            };
            (l, g, GradAt::Logits)
        }
    };
    let (_, grads) = net.backward(&trace, &grad, at)?;
    Ok((loss, flatten_grads(&grads)))
}

/// Gradient check of a whole pathway against central differences.
pub fn check_pathway(net: &Pathway, x: &Matrix, target: &Target, eps: f64) -> Result<GradCheck> {
    let params = net.flat_params();
    gradient_check(&params, eps, |p| {
        let mut probe = net.clone();
        probe.set_flat_params(p)?;
        pathway_loss_and_grad(&probe, x, target)
    })
}
