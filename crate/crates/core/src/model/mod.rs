//! The augmented network: a dropout encoder whose latent code feeds both a
//! small classifying head and a decoding pathway, plus the two single-task
//! benchmarks that share the same encoder.

mod archive;

use std::fmt;

use crate::error::{Error, Result};
use crate::nn::layers::DenseGrads;
use crate::nn::pathway::grad_tensors;
use crate::nn::{Activation, Layer, Matrix, Pathway, Rng, Sampling};

pub use archive::{load, read_archive, save, write_archive, ARCHIVE_MAGIC, ARCHIVE_VERSION};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum ModelKind {
    Augmented,
    ClassifierOnly,
    AutoencoderOnly,
}

impl ModelKind {
    pub const ALL: [ModelKind; 3] = [
        ModelKind::Augmented,
        ModelKind::ClassifierOnly,
        ModelKind::AutoencoderOnly,
    ];

    pub fn name(self) -> &'static str {
        match self {
            ModelKind::Augmented => "augmented",
            ModelKind::ClassifierOnly => "classifier",
            ModelKind::AutoencoderOnly => "autoencoder",
        }
    }

    pub fn has_head(self) -> bool {
        self != ModelKind::AutoencoderOnly
    }

    pub fn has_decoder(self) -> bool {
        self != ModelKind::ClassifierOnly
    }
}

impl fmt::Display for ModelKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl std::str::FromStr for ModelKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "augmented" => Ok(ModelKind::Augmented),
            "classifier" => Ok(ModelKind::ClassifierOnly),
            "autoencoder" => Ok(ModelKind::AutoencoderOnly),
            other => Err(Error::invalid(format!("unknown model kind {other:?}"))),
        }
    }
}

/// Layer sizes and dropout for all three pathways.
#[derive(Clone, Debug, PartialEq)]
pub struct Architecture {
    pub input_dim: usize,
    pub latent_dim: usize,
    /// Encoder widths between the input and the latent layer; the decoder
    /// mirrors them.
    pub hidden_widths: Vec<usize>,
    /// Hidden widths of the classifying head (its layer count is this plus one).
    pub head_widths: Vec<usize>,
    pub dropout_rate: f64,
    /// Normal class plus fault classes. Two classes use a single sigmoid unit.
    pub n_classes: usize,
    pub decoder_output: Activation,
}

impl Architecture {
    /// Encoder widths tapering geometrically from `input_dim` to
    /// `latent_dim` over `layers` dense layers (rounded up).
    pub fn taper(input_dim: usize, latent_dim: usize, layers: usize) -> Vec<usize> {
        let ratio = (latent_dim as f64 / input_dim as f64).powf(1.0 / layers as f64);
        (1..layers)
            .map(|k| ((input_dim as f64 * ratio.powi(k as i32)).ceil() as usize).max(latent_dim))
            .collect()
    }

    fn validate(&self) -> Result<()> {
        if self.input_dim == 0 || self.latent_dim == 0 {
            return Err(Error::invalid("input and latent dimensions must be positive"));
        }
        if self.hidden_widths.is_empty() || self.hidden_widths.contains(&0) {
            return Err(Error::invalid(format!(
                "hidden widths must be non-empty and positive, got {:?}",
                self.hidden_widths
            )));
        }
        if self.head_widths.contains(&0) {
            return Err(Error::invalid("head widths must be positive"));
        }
        if self.n_classes < 2 {
            return Err(Error::invalid("at least two classes (normal + one fault) are needed"));
        }
        if self.decoder_output == Activation::Softmax {
            return Err(Error::invalid("softmax is reserved for the classifier output"));
        }
        Ok(())
    }

    fn head_output_dim(&self) -> usize {
        if self.n_classes == 2 {
            1
        } else {
            self.n_classes
        }
    }
}

const ENCODER_STREAM: u64 = 1;
const HEAD_STREAM: u64 = 2;
const DECODER_STREAM: u64 = 3;

#[derive(Clone, Debug, PartialEq)]
pub struct PathwayNetwork {
    kind: ModelKind,
    arch: Architecture,
    encoder: Pathway,
    head: Option<Pathway>,
    decoder: Option<Pathway>,
}

/// Parameter gradients of a [`PathwayNetwork`], one entry per pathway.
#[derive(Clone, Debug)]
pub struct NetworkGrads {
    pub encoder: Vec<DenseGrads>,
    pub head: Option<Vec<DenseGrads>>,
    pub decoder: Option<Vec<DenseGrads>>,
}

impl NetworkGrads {
    /// Gradient tensors in the order of [`PathwayNetwork::param_tensors_mut`].
    pub fn tensors(&self) -> Vec<&[f64]> {
        let mut out = grad_tensors(&self.encoder);
        if let Some(h) = &self.head {
            out.extend(grad_tensors(h));
        }
        if let Some(d) = &self.decoder {
            out.extend(grad_tensors(d));
        }
        out
    }

    pub fn flatten(&self) -> Vec<f64> {
        self.tensors().concat()
    }
}

/// Outputs of one encoder pass shared by both heads.
#[derive(Clone, Debug)]
pub struct Outputs {
    pub latent: Matrix,
    pub probs: Option<Matrix>,
    pub reconstruction: Option<Matrix>,
}

impl PathwayNetwork {
    /// Builds a network of the given kind.
    ///
    /// One seed is drawn from `rng`; each pathway is initialised from its own
    /// stream of that seed, so kinds built from equal generator states share
    /// bit-identical encoders (and heads/decoders where both have them).
    pub fn build(kind: ModelKind, arch: &Architecture, rng: &mut Rng) -> Result<Self> {
        arch.validate()?;
        let seed = rng.next_u64();

        let mut enc_widths = vec![arch.input_dim];
        enc_widths.extend(&arch.hidden_widths);
        enc_widths.push(arch.latent_dim);
        let encoder = Pathway::mlp(
            &enc_widths,
            Activation::Relu,
            Activation::Identity,
            Some(arch.dropout_rate),
            &mut Rng::derive(seed, ENCODER_STREAM),
        )?;

        let head = if kind.has_head() {
            let mut widths = vec![arch.latent_dim];
            widths.extend(&arch.head_widths);
            widths.push(arch.head_output_dim());
            let out = if arch.n_classes == 2 {
                Activation::Sigmoid
            } else {
                Activation::Softmax
            };
            Some(Pathway::mlp(&widths, Activation::Relu, out, None, &mut Rng::derive(seed, HEAD_STREAM))?)
        } else {
            None
        };

        let decoder = if kind.has_decoder() {
            let widths: Vec<usize> = enc_widths.iter().rev().copied().collect();
            Some(Pathway::mlp(
                &widths,
                Activation::Relu,
                arch.decoder_output,
                None,
                &mut Rng::derive(seed, DECODER_STREAM),
            )?)
        } else {
            None
        };

        Ok(Self {
            kind,
            arch: arch.clone(),
            encoder,
            head,
            decoder,
        })
    }

    pub(crate) fn from_parts(
        kind: ModelKind,
        arch: Architecture,
        encoder: Pathway,
        head: Option<Pathway>,
        decoder: Option<Pathway>,
    ) -> Result<Self> {
        arch.validate()?;
        if encoder.input_dim() != arch.input_dim || encoder.output_dim() != arch.latent_dim {
            return Err(Error::MalformedArchive("encoder dimensions disagree with descriptor".into()));
        }
        if head.is_some() != kind.has_head() || decoder.is_some() != kind.has_decoder() {
            return Err(Error::MalformedArchive("pathways disagree with model kind".into()));
        }
        if let Some(d) = &decoder {
            if d.input_dim() != arch.latent_dim || d.output_dim() != arch.input_dim {
                return Err(Error::MalformedArchive("decoder dimensions disagree with descriptor".into()));
            }
            if d.dropout_layers().next().is_some() {
                return Err(Error::MalformedArchive("dropout outside the encoder".into()));
            }
        }
        if let Some(h) = &head {
            if h.input_dim() != arch.latent_dim || h.output_dim() != arch.head_output_dim() {
                return Err(Error::MalformedArchive("head dimensions disagree with descriptor".into()));
            }
            if h.dropout_layers().next().is_some() {
                return Err(Error::MalformedArchive("dropout outside the encoder".into()));
            }
        }
        Ok(Self {
            kind,
            arch,
            encoder,
            head,
            decoder,
        })
    }

    pub fn kind(&self) -> ModelKind {
        self.kind
    }

    pub fn architecture(&self) -> &Architecture {
        &self.arch
    }

    pub fn encoder(&self) -> &Pathway {
        &self.encoder
    }

    pub fn head(&self) -> Option<&Pathway> {
        self.head.as_ref()
    }

    pub fn decoder(&self) -> Option<&Pathway> {
        self.decoder.as_ref()
    }

    pub fn latent_dim(&self) -> usize {
        self.arch.latent_dim
    }

    pub fn input_dim(&self) -> usize {
        self.arch.input_dim
    }

    pub fn n_classes(&self) -> usize {
        self.arch.n_classes
    }

    /// True when the head is a single sigmoid unit.
    pub fn is_binary(&self) -> bool {
        self.arch.n_classes == 2
    }

    pub fn param_count(&self) -> usize {
        self.encoder.param_count()
            + self.head.as_ref().map_or(0, Pathway::param_count)
            + self.decoder.as_ref().map_or(0, Pathway::param_count)
    }

    pub fn encode(&self, x: &Matrix, rng: &mut Rng, sampling: Sampling) -> Result<Matrix> {
        self.check_input(x)?;
        self.encoder.forward(x, rng, sampling)
    }

    /// Class probabilities with one column per class.
    ///
    /// A binary (sigmoid) head is expanded to `[1 - p, p]`.
    pub fn forward_classify(&self, x: &Matrix, rng: &mut Rng, sampling: Sampling) -> Result<Matrix> {
        let head = self.head.as_ref().ok_or(Error::MissingPathway("classifying"))?;
        let z = self.encode(x, rng, sampling)?;
        let out = head.forward(&z, rng, sampling)?;
        Ok(self.expand_probs(out))
    }

    /// Reconstruction `decoder(encoder(x))` together with the latent code.
    pub fn forward_reconstruct(&self, x: &Matrix, rng: &mut Rng, sampling: Sampling) -> Result<(Matrix, Matrix)> {
        let decoder = self.decoder.as_ref().ok_or(Error::MissingPathway("decoding"))?;
        let z = self.encode(x, rng, sampling)?;
        let xhat = decoder.forward(&z, rng, sampling)?;
        Ok((xhat, z))
    }

    /// Runs the encoder once and feeds the same latent code to every head.
    pub fn forward_all(&self, x: &Matrix, rng: &mut Rng, sampling: Sampling) -> Result<Outputs> {
        let latent = self.encode(x, rng, sampling)?;
        let probs = match &self.head {
            Some(h) => Some(self.expand_probs(h.forward(&latent, rng, sampling)?)),
            None => None,
        };
        let reconstruction = match &self.decoder {
            Some(d) => Some(d.forward(&latent, rng, sampling)?),
            None => None,
        };
        Ok(Outputs {
            latent,
            probs,
            reconstruction,
        })
    }

    /// Decodes latent codes directly.
    pub fn decode(&self, z: &Matrix) -> Result<Matrix> {
        let decoder = self.decoder.as_ref().ok_or(Error::MissingPathway("decoding"))?;
        decoder.forward(z, &mut Rng::seed(0), Sampling::Deterministic)
    }

    pub(crate) fn expand_probs(&self, out: Matrix) -> Matrix {
        if !self.is_binary() {
            return out;
        }
        let mut probs = Matrix::zeros(out.rows(), 2);
        for i in 0..out.rows() {
            let p = out[(i, 0)];
            probs[(i, 0)] = 1.0 - p;
            probs[(i, 1)] = p;
        }
        probs
    }

    fn check_input(&self, x: &Matrix) -> Result<()> {
        if x.cols() != self.arch.input_dim {
            return Err(Error::shape("network input", self.arch.input_dim, x.cols()));
        }
        Ok(())
    }

    /// Parameter tensors in encoder, head, decoder order.
    pub fn param_tensors_mut(&mut self) -> Vec<&mut [f64]> {
        let mut out = self.encoder.param_tensors_mut();
        if let Some(h) = &mut self.head {
            out.extend(h.param_tensors_mut());
        }
        if let Some(d) = &mut self.decoder {
            out.extend(d.param_tensors_mut());
        }
        out
    }

    pub fn flat_params(&self) -> Vec<f64> {
        let mut out = self.encoder.flat_params();
        if let Some(h) = &self.head {
            out.extend(h.flat_params());
        }
        if let Some(d) = &self.decoder {
            out.extend(d.flat_params());
        }
        out
    }

    pub fn set_flat_params(&mut self, params: &[f64]) -> Result<()> {
        if params.len() != self.param_count() {
            return Err(Error::shape("set_flat_params", self.param_count(), params.len()));
        }
        let mut offset = 0;
        let n = self.encoder.param_count();
        self.encoder.set_flat_params(&params[offset..offset + n])?;
        offset += n;
        if let Some(h) = &mut self.head {
            let n = h.param_count();
            h.set_flat_params(&params[offset..offset + n])?;
            offset += n;
        }
        if let Some(d) = &mut self.decoder {
            let n = d.param_count();
            d.set_flat_params(&params[offset..offset + n])?;
        }
        Ok(())
    }

    /// Zero gradients with this network's layout.
    pub fn zero_grads(&self) -> NetworkGrads {
        let zeros = |p: &Pathway| -> Vec<DenseGrads> {
            p.dense_layers()
                .map(|d| DenseGrads {
                    weights: Matrix::zeros(d.weights.rows(), d.weights.cols()),
                    bias: vec![0.0; d.bias.len()],
                })
                .collect()
        };
        NetworkGrads {
            encoder: zeros(&self.encoder),
            head: self.head.as_ref().map(zeros),
            decoder: self.decoder.as_ref().map(zeros),
        }
    }

    /// True if a dropout layer exists anywhere but the encoder.
    pub fn has_dropout_outside_encoder(&self) -> bool {
        let outside = |p: &Option<Pathway>| {
            p.as_ref()
                .is_some_and(|p| p.layers().iter().any(|l| matches!(l, Layer::Dropout(_))))
        };
        outside(&self.head) || outside(&self.decoder)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn thyroid_arch() -> Architecture {
        Architecture {
            input_dim: 6,
            latent_dim: 2,
            hidden_widths: vec![5, 3],
            head_widths: vec![8],
            dropout_rate: 0.2,
            n_classes: 2,
            decoder_output: Activation::Identity,
        }
    }

    #[test]
    fn thyroid_structure() {
        let net = PathwayNetwork::build(ModelKind::Augmented, &thyroid_arch(), &mut Rng::seed(1)).unwrap();
        let enc: Vec<_> = net.encoder().dense_layers().map(|d| (d.input_dim(), d.output_dim())).collect();
        assert_eq!(enc, vec![(6, 5), (5, 3), (3, 2)]);
        assert_eq!(net.encoder().dropout_layers().count(), 3);
        assert_eq!(net.head().unwrap().dense_layers().count(), 2);
        let dec: Vec<_> = net.decoder().unwrap().dense_layers().map(|d| (d.input_dim(), d.output_dim())).collect();
        assert_eq!(dec, vec![(2, 3), (3, 5), (5, 6)]);
        assert!(!net.has_dropout_outside_encoder());
    }

    #[test]
    fn chiller_structure() {
        let arch = Architecture {
            input_dim: 16,
            latent_dim: 4,
            hidden_widths: Architecture::taper(16, 4, 3),
            head_widths: vec![8, 8],
            dropout_rate: 0.2,
            n_classes: 7,
            decoder_output: Activation::Identity,
        };
        let net = PathwayNetwork::build(ModelKind::Augmented, &arch, &mut Rng::seed(1)).unwrap();
        assert_eq!(net.encoder().dense_layers().count(), 3);
        assert_eq!(net.head().unwrap().dense_layers().count(), 3);
        assert_eq!(net.decoder().unwrap().dense_layers().count(), 3);
        assert_eq!(net.head().unwrap().output_dim(), 7);
    }

    #[test]
    fn taper_matches_thyroid_widths() {
        assert_eq!(Architecture::taper(6, 2, 3), vec![5, 3]);
    }

    #[test]
    fn shared_encoder_across_kinds() {
        let arch = thyroid_arch();
        let nets: Vec<_> = ModelKind::ALL
            .iter()
            .map(|&k| PathwayNetwork::build(k, &arch, &mut Rng::seed(4)).unwrap())
            .collect();
        assert_eq!(nets[0].encoder(), nets[1].encoder());
        assert_eq!(nets[0].encoder(), nets[2].encoder());
        assert_eq!(nets[0].head(), nets[1].head());
        assert_eq!(nets[0].decoder(), nets[2].decoder());
    }

    #[test]
    fn classifier_only_cannot_reconstruct() {
        let net = PathwayNetwork::build(ModelKind::ClassifierOnly, &thyroid_arch(), &mut Rng::seed(1)).unwrap();
        assert!(net.decoder().is_none());
        let x = Matrix::zeros(1, 6);
        assert!(matches!(
            net.forward_reconstruct(&x, &mut Rng::seed(0), Sampling::Deterministic),
            Err(Error::MissingPathway(_))
        ));
        let ae = PathwayNetwork::build(ModelKind::AutoencoderOnly, &thyroid_arch(), &mut Rng::seed(1)).unwrap();
        assert!(matches!(
            ae.forward_classify(&x, &mut Rng::seed(0), Sampling::Deterministic),
            Err(Error::MissingPathway(_))
        ));
    }

    #[test]
    fn deterministic_forward_repeats() {
        let net = PathwayNetwork::build(ModelKind::Augmented, &thyroid_arch(), &mut Rng::seed(2)).unwrap();
        let x = Matrix::from_rows(&[[0.1, -0.4, 1.2, 0.0, 0.3, -2.0]]).unwrap();
        let a = net.forward_classify(&x, &mut Rng::seed(1), Sampling::Deterministic).unwrap();
        let b = net.forward_classify(&x, &mut Rng::seed(2), Sampling::Deterministic).unwrap();
        assert_eq!(a, b);
        assert!((a.as_slice().iter().sum::<f64>() - 1.0).abs() < 1e-12);
        let (xhat, z) = net.forward_reconstruct(&x, &mut Rng::seed(1), Sampling::Deterministic).unwrap();
        assert_eq!(z.cols(), 2);
        assert_eq!(xhat.cols(), 6);
        let (xhat2, _) = net.forward_reconstruct(&x, &mut Rng::seed(9), Sampling::Deterministic).unwrap();
        assert_eq!(xhat, xhat2);
    }

    #[test]
    fn stochastic_forward_varies() {
        let net = PathwayNetwork::build(ModelKind::Augmented, &thyroid_arch(), &mut Rng::seed(2)).unwrap();
        let x = Matrix::from_rows(&[[0.5, -0.4, 1.2, 0.7, 0.3, -2.0]]).unwrap();
        let mut rng = Rng::seed(10);
        let a = net.forward_classify(&x, &mut rng, Sampling::Stochastic).unwrap();
        let b = net.forward_classify(&x, &mut rng, Sampling::Stochastic).unwrap();
        assert_ne!(a, b);
        let (ra, _) = net.forward_reconstruct(&x, &mut rng, Sampling::Stochastic).unwrap();
        let (rb, _) = net.forward_reconstruct(&x, &mut rng, Sampling::Stochastic).unwrap();
        assert_ne!(ra, rb);
    }

    #[test]
    fn fresh_network_is_near_uniform() {
        let arch = Architecture {
            n_classes: 5,
            ..thyroid_arch()
        };
        let net = PathwayNetwork::build(ModelKind::ClassifierOnly, &arch, &mut Rng::seed(3)).unwrap();
        let x = Matrix::from_rows(&[[0.2, -0.1, 0.3, 0.0, -0.2, 0.1]]).unwrap();
        let p = net.forward_classify(&x, &mut Rng::seed(0), Sampling::Deterministic).unwrap();
        for &v in p.as_slice() {
            assert!((v - 0.2).abs() < 0.1, "{p:?}");
        }
    }

    #[test]
    fn invalid_dims_rejected() {
        let mut arch = thyroid_arch();
        arch.latent_dim = 0;
        assert!(PathwayNetwork::build(ModelKind::Augmented, &arch, &mut Rng::seed(0)).is_err());
        let mut arch = thyroid_arch();
        arch.hidden_widths.clear();
        assert!(PathwayNetwork::build(ModelKind::Augmented, &arch, &mut Rng::seed(0)).is_err());
    }
}
