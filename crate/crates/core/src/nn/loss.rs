//! Losses paired with their exact gradients.

use crate::error::{Error, Result};

use super::Matrix;

/// Floor applied to the probability of the true class before taking the log.
pub const PROB_EPSILON: f64 = 1e-12;

/// Mean negative log-likelihood of softmax outputs.
///
/// The returned gradient is w.r.t. the pre-softmax logits: `(p - onehot) / batch`.
pub fn cross_entropy(probs: &Matrix, labels: &[usize]) -> Result<(f64, Matrix)> {
    let (batch, classes) = probs.shape();
    if labels.len() != batch {
        return Err(Error::shape("cross_entropy", batch, labels.len()));
    }
    if batch == 0 {
        return Err(Error::Empty("cross_entropy batch".into()));
    }
    let mut grad = probs.clone();
    let mut loss = 0.0;
    for (i, &label) in labels.iter().enumerate() {
        if label >= classes {
            return Err(Error::LabelOutOfRange { label, classes });
        }
        let row = probs.row(i);
        let sum: f64 = row.iter().sum();
        if (sum - 1.0).abs() > 1e-9 {
            return Err(Error::invalid(format!("row {i} of probabilities sums to {sum}")));
        }
        loss -= row[label].max(PROB_EPSILON).ln();
        grad[(i, label)] -= 1.0;
    }
    grad.scale(1.0 / batch as f64);
    Ok((loss / batch as f64, grad))
}

/// Binary cross-entropy of a single sigmoid output column against 0/1 labels.
///
/// Gradient is w.r.t. the pre-sigmoid logit: `(p - y) / batch`.
pub fn binary_cross_entropy(probs: &Matrix, labels: &[usize]) -> Result<(f64, Matrix)> {
    let (batch, cols) = probs.shape();
    if cols != 1 {
        return Err(Error::shape("binary_cross_entropy", 1, cols));
    }
    if labels.len() != batch {
        return Err(Error::shape("binary_cross_entropy", batch, labels.len()));
    }
    if batch == 0 {
        return Err(Error::Empty("binary_cross_entropy batch".into()));
    }
    let mut grad = probs.clone();
    let mut loss = 0.0;
    for (i, &label) in labels.iter().enumerate() {
        let p = probs[(i, 0)];
        let y = match label {
            0 => 0.0,
            1 => 1.0,
            _ => return Err(Error::LabelOutOfRange { label, classes: 2 }),
        };
        let p_true = if label == 1 { p } else { 1.0 - p };
        loss -= p_true.max(PROB_EPSILON).ln();
        grad[(i, 0)] = p - y;
    }
    grad.scale(1.0 / batch as f64);
    Ok((loss / batch as f64, grad))
}

/// Mean over the batch of each example's mean squared error.
pub fn mse(xhat: &Matrix, x: &Matrix) -> Result<(f64, Matrix)> {
    if xhat.shape() != x.shape() {
        return Err(Error::shape(
            "mse",
            format!("{:?}", x.shape()),
            format!("{:?}", xhat.shape()),
        ));
    }
    let (batch, dim) = x.shape();
    if batch == 0 || dim == 0 {
        return Err(Error::Empty("mse input".into()));
    }
    let per_example = mse_rows(xhat, x)?;
    let loss = per_example.iter().sum::<f64>() / batch as f64;
    let scale = 2.0 / (batch * dim) as f64;
    let mut grad = xhat.clone();
    for (g, t) in grad.as_mut_slice().iter_mut().zip(x.as_slice()) {
        *g = (*g - t) * scale;
    }
    Ok((loss, grad))
}

/// Per-example mean squared error.
pub fn mse_rows(xhat: &Matrix, x: &Matrix) -> Result<Vec<f64>> {
    if xhat.shape() != x.shape() {
        return Err(Error::shape(
            "mse_rows",
            format!("{:?}", x.shape()),
            format!("{:?}", xhat.shape()),
        ));
    }
    let dim = x.cols() as f64;
    Ok(xhat
        .iter_rows()
        .zip(x.iter_rows())
        .map(|(a, b)| a.iter().zip(b).map(|(p, q)| (p - q) * (p - q)).sum::<f64>() / dim)
        .collect())
}
