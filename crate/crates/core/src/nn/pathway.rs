use crate::error::{Error, Result};

use super::layers::{Activation, DenseGrads, DenseLayer, DropoutLayer, Layer, Sampling};
use super::{Matrix, Rng};

/// A feed-forward chain of dense and dropout layers.
#[derive(Clone, Debug, PartialEq)]
pub struct Pathway {
    layers: Vec<Layer>,
}

/// Activations recorded during a forward pass, replayed by [`Pathway::backward`].
///
/// `values[i]` is the input to layer `i`; the last entry is the pathway output.
#[derive(Clone, Debug)]
pub struct Trace {
    values: Vec<Matrix>,
    masks: Vec<Option<Matrix>>,
}

impl Trace {
    pub fn output(&self) -> &Matrix {
        self.values.last().expect("trace holds at least the input")
    }

    pub fn input(&self) -> &Matrix {
        &self.values[0]
    }
}

/// Where the incoming gradient of [`Pathway::backward`] is taken.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum GradAt {
    /// Gradient w.r.t. the final activation output.
    Output,
    /// Gradient w.r.t. the final pre-activation (fused softmax/sigmoid losses).
    Logits,
}

impl Pathway {
    pub fn new(layers: Vec<Layer>) -> Result<Self> {
        let dense: Vec<&DenseLayer> = layers.iter().filter_map(Layer::as_dense).collect();
        for pair in dense.windows(2) {
            if pair[0].output_dim() != pair[1].input_dim() {
                return Err(Error::shape(
                    "Pathway::new",
                    pair[0].output_dim(),
                    pair[1].input_dim(),
                ));
            }
        }
        let last_dense = layers.iter().rposition(|l| matches!(l, Layer::Dense(_)));
        for (i, layer) in layers.iter().enumerate() {
            if let Layer::Dense(d) = layer {
                if d.activation == Activation::Softmax && Some(i) != last_dense {
                    return Err(Error::invalid("softmax is only allowed on the final layer"));
                }
            }
        }
        Ok(Self { layers })
    }

    /// Dense layers with the given widths, `widths[0]` being the input size.
    ///
    /// Each dense layer is followed by a dropout layer when `dropout` is set.
    pub fn mlp(
        widths: &[usize],
        hidden: Activation,
        output: Activation,
        dropout: Option<f64>,
        rng: &mut Rng,
    ) -> Result<Self> {
        if widths.len() < 2 || widths.contains(&0) {
            return Err(Error::invalid(format!("bad layer widths {widths:?}")));
        }
        let mut layers = Vec::new();
        let n = widths.len() - 1;
        for (i, pair) in widths.windows(2).enumerate() {
            let act = if i + 1 == n { output } else { hidden };
            layers.push(Layer::Dense(DenseLayer::glorot(pair[0], pair[1], act, rng)));
            if let Some(rate) = dropout {
                layers.push(Layer::Dropout(DropoutLayer::new(rate)?));
            }
        }
        Self::new(layers)
    }

    pub fn layers(&self) -> &[Layer] {
        &self.layers
    }

    pub fn dense_layers(&self) -> impl Iterator<Item = &DenseLayer> {
        self.layers.iter().filter_map(Layer::as_dense)
    }

    pub fn dropout_layers(&self) -> impl Iterator<Item = &DropoutLayer> {
        self.layers.iter().filter_map(|l| match l {
            Layer::Dropout(d) => Some(d),
            Layer::Dense(_) => None,
        })
    }

    pub fn input_dim(&self) -> usize {
        self.dense_layers().next().map_or(0, DenseLayer::input_dim)
    }

    pub fn output_dim(&self) -> usize {
        self.dense_layers().last().map_or(0, DenseLayer::output_dim)
    }

    pub fn output_activation(&self) -> Option<Activation> {
        self.dense_layers().last().map(|d| d.activation)
    }

    pub fn param_count(&self) -> usize {
        self.dense_layers().map(DenseLayer::param_count).sum()
    }

    pub fn forward(&self, x: &Matrix, rng: &mut Rng, sampling: Sampling) -> Result<Matrix> {
        let mut h = x.clone();
        for layer in &self.layers {
            h = match layer {
                Layer::Dense(d) => d.forward(&h)?,
                Layer::Dropout(d) => d.forward(&h, rng, sampling).0,
            };
        }
        Ok(h)
    }

    pub fn forward_traced(&self, x: &Matrix, rng: &mut Rng, sampling: Sampling) -> Result<Trace> {
        let mut values = Vec::with_capacity(self.layers.len() + 1);
        let mut masks = Vec::with_capacity(self.layers.len());
        values.push(x.clone());
        for layer in &self.layers {
            let h = values.last().expect("non-empty");
            let (out, mask) = match layer {
                Layer::Dense(d) => (d.forward(h)?, None),
                Layer::Dropout(d) => d.forward(h, rng, sampling),
            };
            values.push(out);
            masks.push(mask);
        }
        Ok(Trace { values, masks })
    }

    /// Backpropagates `grad` through the recorded pass.
    ///
    /// Returns the gradient w.r.t. the pathway input and one [`DenseGrads`]
    /// per dense layer, in layer order.
    pub fn backward(&self, trace: &Trace, grad: &Matrix, at: GradAt) -> Result<(Matrix, Vec<DenseGrads>)> {
        if grad.shape() != trace.output().shape() {
            return Err(Error::shape(
                "Pathway::backward",
                format!("{:?}", trace.output().shape()),
                format!("{:?}", grad.shape()),
            ));
        }
        let last_dense = self.layers.iter().rposition(|l| matches!(l, Layer::Dense(_)));
        let mut g = grad.clone();
        let mut grads = Vec::new();
        for (i, layer) in self.layers.iter().enumerate().rev() {
            match layer {
                Layer::Dense(d) => {
                    let pre = if at == GradAt::Logits && Some(i) == last_dense {
                        g
                    } else {
                        d.activation.backward(&trace.values[i + 1], &g)
                    };
                    let (dx, dg) = d.backward_pre(&trace.values[i], &pre)?;
                    grads.push(dg);
                    g = dx;
                }
                Layer::Dropout(d) => {
                    if at == GradAt::Logits && last_dense.is_some_and(|ld| ld < i) {
                        return Err(Error::invalid("logit gradient requires a dense output layer"));
                    }
                    g = d.backward(trace.masks[i].as_ref(), &g);
                }
            }
        }
        grads.reverse();
        g.ensure_finite("Pathway::backward")?;
        Ok((g, grads))
    }

    /// All parameters flattened as `[W₀, b₀, W₁, b₁, ...]`.
    pub fn flat_params(&self) -> Vec<f64> {
        let mut out = Vec::with_capacity(self.param_count());
        for d in self.dense_layers() {
            out.extend_from_slice(d.weights.as_slice());
            out.extend_from_slice(&d.bias);
        }
        out
    }

    pub fn set_flat_params(&mut self, params: &[f64]) -> Result<()> {
        if params.len() != self.param_count() {
            return Err(Error::shape("set_flat_params", self.param_count(), params.len()));
        }
        let mut offset = 0;
        for layer in &mut self.layers {
            if let Layer::Dense(d) = layer {
                let nw = d.weights.as_slice().len();
                d.weights.as_mut_slice().copy_from_slice(&params[offset..offset + nw]);
                offset += nw;
                let nb = d.bias.len();
                d.bias.copy_from_slice(&params[offset..offset + nb]);
                offset += nb;
            }
        }
        Ok(())
    }

    /// Mutable parameter tensors in the same order as [`flat_params`](Self::flat_params).
    pub fn param_tensors_mut(&mut self) -> Vec<&mut [f64]> {
        let mut out = Vec::new();
        for layer in &mut self.layers {
            if let Layer::Dense(d) = layer {
                out.push(d.weights.as_mut_slice());
                out.push(d.bias.as_mut_slice());
            }
        }
        out
    }
}

/// Flattens per-layer gradients into tensors aligned with
/// [`Pathway::param_tensors_mut`].
pub fn grad_tensors(grads: &[DenseGrads]) -> Vec<&[f64]> {
    let mut out = Vec::with_capacity(grads.len() * 2);
    for g in grads {
        out.push(g.weights.as_slice());
        out.push(g.bias.as_slice());
    }
    out
}

pub fn flatten_grads(grads: &[DenseGrads]) -> Vec<f64> {
    grad_tensors(grads).concat()
}
