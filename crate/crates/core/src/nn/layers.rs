use crate::error::{Error, Result};

use super::{Matrix, Rng};

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Activation {
    Identity,
    Relu,
    Sigmoid,
    Softmax,
}

impl Activation {
    pub fn name(self) -> &'static str {
        match self {
            Activation::Identity => "identity",
            Activation::Relu => "relu",
            Activation::Sigmoid => "sigmoid",
            Activation::Softmax => "softmax",
        }
    }

    pub fn from_name(name: &str) -> Option<Self> {
        Some(match name {
            "identity" => Activation::Identity,
            "relu" => Activation::Relu,
            "sigmoid" => Activation::Sigmoid,
            "softmax" => Activation::Softmax,
            _ => return None,
        })
    }

    /// Applies the activation in place to a batch of pre-activations.
    pub fn apply(self, z: &mut Matrix) {
        match self {
            Activation::Identity => {}
            Activation::Relu => z.as_mut_slice().iter_mut().for_each(|v| *v = v.max(0.0)),
            Activation::Sigmoid => z.as_mut_slice().iter_mut().for_each(|v| *v = sigmoid(*v)),
            Activation::Softmax => {
                for i in 0..z.rows() {
                    softmax_in_place(z.row_mut(i));
                }
            }
        }
    }

    /// Maps a gradient w.r.t. the activation output back to the pre-activation,
    /// given the activation output `out`.
    pub fn backward(self, out: &Matrix, grad: &Matrix) -> Matrix {
        let mut g = grad.clone();
        match self {
            Activation::Identity => {}
            Activation::Relu => {
                for (gi, &o) in g.as_mut_slice().iter_mut().zip(out.as_slice()) {
                    if o <= 0.0 {
                        *gi = 0.0;
                    }
                }
            }
            Activation::Sigmoid => {
                for (gi, &o) in g.as_mut_slice().iter_mut().zip(out.as_slice()) {
                    *gi *= o * (1.0 - o);
                }
            }
            Activation::Softmax => {
                for i in 0..g.rows() {
                    let s = out.row(i);
                    let inner: f64 = grad.row(i).iter().zip(s).map(|(a, b)| a * b).sum();
                    for (gk, &sk) in g.row_mut(i).iter_mut().zip(s) {
                        *gk = sk * (*gk - inner);
                    }
                }
            }
        }
        g
    }
}

#[inline]
pub fn sigmoid(x: f64) -> f64 {
    if x >= 0.0 {
        1.0 / (1.0 + (-x).exp())
    } else {
        let e = x.exp();
        e / (1.0 + e)
    }
}

pub fn softmax_in_place(row: &mut [f64]) {
    let max = row.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let mut sum = 0.0;
    for v in row.iter_mut() {
        *v = (*v - max).exp();
        sum += *v;
    }
    for v in row.iter_mut() {
        *v /= sum;
    }
}

/// Fully connected layer computing `activation(x Wᵀ + b)`.
#[derive(Clone, Debug, PartialEq)]
pub struct DenseLayer {
    pub weights: Matrix,
    pub bias: Vec<f64>,
    pub activation: Activation,
}

/// Parameter gradients of one dense layer.
#[derive(Clone, Debug)]
pub struct DenseGrads {
    pub weights: Matrix,
    pub bias: Vec<f64>,
}

impl DenseLayer {
    pub fn new(weights: Matrix, bias: Vec<f64>, activation: Activation) -> Result<Self> {
        if bias.len() != weights.rows() {
            return Err(Error::shape("DenseLayer::new", weights.rows(), bias.len()));
        }
        Ok(Self {
            weights,
            bias,
            activation,
        })
    }

    /// Glorot-uniform weights in `±sqrt(6 / (fan_in + fan_out))`, zero bias.
    pub fn glorot(input: usize, output: usize, activation: Activation, rng: &mut Rng) -> Self {
        let limit = (6.0 / (input + output) as f64).sqrt();
        let data = (0..input * output)
            .map(|_| rng.uniform_range(-limit, limit))
            .collect();
        Self {
            weights: Matrix::new(output, input, data).expect("sized above"),
            bias: vec![0.0; output],
            activation,
        }
    }

    pub fn input_dim(&self) -> usize {
        self.weights.cols()
    }

    pub fn output_dim(&self) -> usize {
        self.weights.rows()
    }

    pub fn param_count(&self) -> usize {
        self.weights.rows() * self.weights.cols() + self.bias.len()
    }

    pub fn forward(&self, x: &Matrix) -> Result<Matrix> {
        let mut z = self.pre_activation(x)?;
        self.activation.apply(&mut z);
        z.ensure_finite("dense_forward")?;
        Ok(z)
    }

    pub fn pre_activation(&self, x: &Matrix) -> Result<Matrix> {
        if x.cols() != self.input_dim() {
            return Err(Error::shape("dense_forward", self.input_dim(), x.cols()));
        }
        let mut z = x.matmul_transb(&self.weights)?;
        for i in 0..z.rows() {
            for (v, b) in z.row_mut(i).iter_mut().zip(&self.bias) {
                *v += b;
            }
        }
        Ok(z)
    }

    /// Backward pass from a gradient w.r.t. the pre-activation.
    pub fn backward_pre(&self, input: &Matrix, grad_pre: &Matrix) -> Result<(Matrix, DenseGrads)> {
        let dw = grad_pre.matmul_transa(input)?;
        let db = grad_pre.column_sums();
        let dx = grad_pre.matmul(&self.weights)?;
        Ok((dx, DenseGrads { weights: dw, bias: db }))
    }
}

/// Inverted dropout: survivors are scaled by `1 / (1 - rate)`.
#[derive(Clone, Debug, PartialEq)]
pub struct DropoutLayer {
    rate: f64,
}

impl DropoutLayer {
    pub fn new(rate: f64) -> Result<Self> {
        if !(0.0..1.0).contains(&rate) {
            return Err(Error::invalid(format!("dropout rate {rate} outside [0, 1)")));
        }
        Ok(Self { rate })
    }

    pub fn rate(&self) -> f64 {
        self.rate
    }

    /// Returns the output and, in stochastic mode, the per-element scale mask
    /// (0 or `1/(1-rate)`) needed to replay the gradient.
    pub fn forward(&self, x: &Matrix, rng: &mut Rng, sampling: Sampling) -> (Matrix, Option<Matrix>) {
        if sampling == Sampling::Deterministic || self.rate == 0.0 {
            return (x.clone(), None);
        }
        let keep = 1.0 / (1.0 - self.rate);
        let mask_data: Vec<f64> = (0..x.rows() * x.cols())
            .map(|_| if rng.uniform() < self.rate { 0.0 } else { keep })
            .collect();
        let mask = Matrix::new(x.rows(), x.cols(), mask_data).expect("sized above");
        let mut out = x.clone();
        for (o, m) in out.as_mut_slice().iter_mut().zip(mask.as_slice()) {
            *o *= m;
        }
        (out, Some(mask))
    }

    pub fn backward(&self, mask: Option<&Matrix>, grad: &Matrix) -> Matrix {
        match mask {
            None => grad.clone(),
            Some(mask) => {
                let mut g = grad.clone();
                for (gi, m) in g.as_mut_slice().iter_mut().zip(mask.as_slice()) {
                    *gi *= m;
                }
                g
            }
        }
    }
}

/// Whether dropout layers sample masks or pass activations through.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Sampling {
    Deterministic,
    Stochastic,
}

impl Sampling {
    pub fn from_flag(stochastic: bool) -> Self {
        if stochastic {
            Sampling::Stochastic
        } else {
            Sampling::Deterministic
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub enum Layer {
    Dense(DenseLayer),
    Dropout(DropoutLayer),
}

impl Layer {
    pub fn as_dense(&self) -> Option<&DenseLayer> {
        match self {
            Layer::Dense(d) => Some(d),
            Layer::Dropout(_) => None,
        }
    }
}
