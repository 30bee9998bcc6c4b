//! Flat `key = value` experiment configuration.

use std::fmt::Write as _;
use std::path::PathBuf;

use crate::data::DatasetKind;
use crate::error::{Error, Result};
use crate::model::{Architecture, ModelKind};
use crate::nn::{Activation, AdamConfig};
use crate::train::{EarlyStopping, TrainConfig};

pub const DATA_DIR_ENV: &str = "OODFDD_DATA_DIR";

#[derive(Clone, Debug, PartialEq)]
pub struct ExperimentConfig {
    pub dataset: DatasetKind,
    pub model: ModelKind,
    pub latent_dim: usize,
    /// Encoder widths before the bottleneck; empty means a taper from the
    /// input width over `encoder_layers` layers.
    pub hidden_widths: Vec<usize>,
    pub encoder_layers: usize,
    pub head_widths: Vec<usize>,
    pub dropout_rate: f64,
    pub beta: f64,
    pub epochs: usize,
    pub pretrain_epochs: usize,
    pub batch_size: usize,
    pub lr: f64,
    pub seed: u64,
    /// Early stopping for the two benchmark models.
    pub early_stopping: bool,
    pub patience: usize,
    pub min_delta: f64,
    pub validation_fraction: f64,
    pub alpha: f64,
    pub mc_samples: usize,
    pub train_fraction: f64,
    pub data_dir: Option<PathBuf>,
    pub output_dir: PathBuf,
    pub chiller_n_per_class: usize,
    pub mnist_max_per_digit: Option<usize>,
    /// Normal/fault pairs per fault class interpolated into ambiguous digits.
    pub ambiguous_pairs: usize,
    pub sweep_points: usize,
}

impl ExperimentConfig {
    pub fn defaults(dataset: DatasetKind) -> Self {
        let base = Self {
            dataset,
            model: ModelKind::Augmented,
            latent_dim: 2,
            hidden_widths: Vec::new(),
            encoder_layers: 3,
            head_widths: vec![8],
            dropout_rate: 0.2,
            beta: 1.0,
            epochs: 100,
            pretrain_epochs: 20,
            batch_size: 64,
            lr: 1e-3,
            seed: 0,
            early_stopping: true,
            patience: 10,
            min_delta: 1e-4,
            validation_fraction: 0.1,
            alpha: 0.1,
            mc_samples: 100,
            train_fraction: 0.5,
            data_dir: None,
            output_dir: PathBuf::from("out"),
            chiller_n_per_class: 400,
            mnist_max_per_digit: None,
            ambiguous_pairs: 100,
            sweep_points: 50,
        };
        match dataset {
            DatasetKind::Thyroid => base,
            DatasetKind::Chiller => Self {
                latent_dim: 4,
                head_widths: vec![8, 8],
                epochs: 160,
                pretrain_epochs: 40,
                alpha: 0.05,
                ..base
            },
            DatasetKind::Digits => Self {
                latent_dim: 8,
                hidden_widths: vec![128, 64],
                head_widths: vec![8, 8],
                epochs: 160,
                pretrain_epochs: 40,
                alpha: 0.05,
                ..base
            },
        }
    }

    /// Parses `key = value` lines; `#` starts a comment. The `dataset` key
    /// selects the defaults the remaining keys override.
    pub fn parse(text: &str) -> Result<Self> {
        Self::from_pairs(&parse_pairs(text)?)
    }

    /// File contents (if any) with `overrides` replacing or adding keys.
    pub fn with_overrides(text: Option<&str>, overrides: &[(String, String)]) -> Result<Self> {
        let mut pairs = match text {
            Some(t) => parse_pairs(t)?,
            None => Vec::new(),
        };
        for (k, v) in overrides {
            match pairs.iter_mut().find(|(pk, _)| pk == k) {
                Some(p) => p.1 = v.clone(),
                None => pairs.push((k.clone(), v.clone())),
            }
        }
        Self::from_pairs(&pairs)
    }

    fn from_pairs(pairs: &[(String, String)]) -> Result<Self> {
        let dataset = match pairs.iter().find(|(k, _)| k == "dataset") {
            Some((_, d)) => d.parse()?,
            None => DatasetKind::Thyroid,
        };
        let mut cfg = Self::defaults(dataset);
        for (k, v) in pairs.iter().filter(|(k, _)| k != "dataset") {
            cfg.set(k, v)?;
        }
        Ok(cfg)
    }

    pub fn set(&mut self, key: &str, value: &str) -> Result<()> {
        fn num<T: std::str::FromStr>(key: &str, v: &str) -> Result<T> {
            v.parse().map_err(|_| Error::Config(format!("{key}: cannot parse {v:?}")))
        }
        fn list(key: &str, v: &str) -> Result<Vec<usize>> {
            v.split(',').map(str::trim).filter(|s| !s.is_empty()).map(|s| num(key, s)).collect()
        }
        fn flag(key: &str, v: &str) -> Result<bool> {
            match v {
                "true" | "yes" | "1" => Ok(true),
                "false" | "no" | "0" => Ok(false),
                _ => Err(Error::Config(format!("{key}: expected true or false, got {v:?}"))),
            }
        }
        fn optional(key: &str, v: &str) -> Result<Option<usize>> {
            if v == "none" || v.is_empty() {
                Ok(None)
            } else {
                num(key, v).map(Some)
            }
        }
        match key {
            "dataset" => *self = Self::defaults(value.parse()?),
            "model" => self.model = value.parse().map_err(|_| Error::Config(format!("unknown model {value:?}")))?,
            "latent_dim" => self.latent_dim = num(key, value)?,
            "hidden_widths" => self.hidden_widths = list(key, value)?,
            "encoder_layers" => self.encoder_layers = num(key, value)?,
            "head_widths" => self.head_widths = list(key, value)?,
            "dropout_rate" => self.dropout_rate = num(key, value)?,
            "beta" => self.beta = num(key, value)?,
            "epochs" => self.epochs = num(key, value)?,
            "pretrain_epochs" => self.pretrain_epochs = num(key, value)?,
            "batch_size" => self.batch_size = num(key, value)?,
            "lr" => self.lr = num(key, value)?,
            "seed" => self.seed = num(key, value)?,
            "early_stopping" => self.early_stopping = flag(key, value)?,
            "patience" => self.patience = num(key, value)?,
            "min_delta" => self.min_delta = num(key, value)?,
            "validation_fraction" => self.validation_fraction = num(key, value)?,
            "alpha" => self.alpha = num(key, value)?,
            "mc_samples" => self.mc_samples = num(key, value)?,
            "train_fraction" => self.train_fraction = num(key, value)?,
            "data_dir" => self.data_dir = Some(PathBuf::from(value)),
            "output_dir" => self.output_dir = PathBuf::from(value),
            "chiller_n_per_class" => self.chiller_n_per_class = num(key, value)?,
            "mnist_max_per_digit" => self.mnist_max_per_digit = optional(key, value)?,
            "ambiguous_pairs" => self.ambiguous_pairs = num(key, value)?,
            "sweep_points" => self.sweep_points = num(key, value)?,
            _ => return Err(Error::Config(format!("unknown key {key:?}"))),
        }
        Ok(())
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |m: &str| Err(Error::Config(m.into()));
        if !(self.alpha > 0.0 && self.alpha < 1.0) {
            return bad("alpha must lie in (0, 1)");
        }
        if self.mc_samples < 2 {
            return bad("mc_samples must be at least 2");
        }
        if !(0.0..1.0).contains(&self.dropout_rate) {
            return bad("dropout_rate must lie in [0, 1)");
        }
        if !(self.train_fraction > 0.0 && self.train_fraction < 1.0) {
            return bad("train_fraction must lie in (0, 1)");
        }
        if self.latent_dim == 0 || self.batch_size == 0 || self.head_widths.contains(&0) {
            return bad("widths and batch size must be positive");
        }
        if self.hidden_widths.is_empty() && self.encoder_layers == 0 {
            return bad("encoder_layers must be positive");
        }
        if !(self.lr > 0.0) || !(self.beta >= 0.0) {
            return bad("lr must be positive and beta non-negative");
        }
        if self.sweep_points < 2 {
            return bad("sweep_points must be at least 2");
        }
        Ok(())
    }

    /// Flag or config value, then the environment variable, then `./data`.
    pub fn resolved_data_dir(&self) -> PathBuf {
        self.data_dir
            .clone()
            .or_else(|| std::env::var_os(DATA_DIR_ENV).map(PathBuf::from))
            .unwrap_or_else(|| PathBuf::from("data"))
    }

    pub fn architecture(&self, input_dim: usize, n_classes: usize) -> Architecture {
        let hidden_widths = if self.hidden_widths.is_empty() {
            Architecture::taper(input_dim, self.latent_dim, self.encoder_layers)
        } else {
            self.hidden_widths.clone()
        };
        Architecture {
            input_dim,
            latent_dim: self.latent_dim,
            hidden_widths,
            head_widths: self.head_widths.clone(),
            dropout_rate: self.dropout_rate,
            n_classes,
            decoder_output: match self.dataset {
                DatasetKind::Digits => Activation::Sigmoid,
                _ => Activation::Identity,
            },
        }
    }

    /// Training schedule for `kind`. The benchmarks get the augmented
    /// model's total epoch budget as an upper bound for early stopping.
    pub fn train_config(&self, kind: ModelKind) -> TrainConfig {
        let benchmark = kind != ModelKind::Augmented;
        TrainConfig {
            beta: self.beta,
            epochs: if benchmark { self.epochs + self.pretrain_epochs } else { self.epochs },
            pretrain_epochs: self.pretrain_epochs,
            batch_size: self.batch_size,
            adam: AdamConfig {
                lr: self.lr,
                ..AdamConfig::default()
            },
            seed: self.seed,
            early_stopping: (benchmark && self.early_stopping).then_some(EarlyStopping {
                patience: self.patience,
                min_delta: self.min_delta,
                validation_fraction: self.validation_fraction,
            }),
        }
    }

    pub fn to_kv(&self) -> String {
        let join = |v: &[usize]| v.iter().map(usize::to_string).collect::<Vec<_>>().join(",");
        let mut s = String::new();
        let mut put = |k: &str, v: String| {
            let _ = writeln!(s, "{k} = {v}");
        };
        put("dataset", self.dataset.name().into());
        put("model", self.model.name().into());
        put("latent_dim", self.latent_dim.to_string());
        put("hidden_widths", join(&self.hidden_widths));
        put("encoder_layers", self.encoder_layers.to_string());
        put("head_widths", join(&self.head_widths));
        put("dropout_rate", format!("{:?}", self.dropout_rate));
        put("beta", format!("{:?}", self.beta));
        put("epochs", self.epochs.to_string());
        put("pretrain_epochs", self.pretrain_epochs.to_string());
        put("batch_size", self.batch_size.to_string());
        put("lr", format!("{:?}", self.lr));
        put("seed", self.seed.to_string());
        put("early_stopping", self.early_stopping.to_string());
        put("patience", self.patience.to_string());
        put("min_delta", format!("{:?}", self.min_delta));
        put("validation_fraction", format!("{:?}", self.validation_fraction));
        put("alpha", format!("{:?}", self.alpha));
        put("mc_samples", self.mc_samples.to_string());
        put("train_fraction", format!("{:?}", self.train_fraction));
        if let Some(d) = &self.data_dir {
            put("data_dir", d.display().to_string());
        }
        put("output_dir", self.output_dir.display().to_string());
        put("chiller_n_per_class", self.chiller_n_per_class.to_string());
        put(
            "mnist_max_per_digit",
            self.mnist_max_per_digit.map_or("none".into(), |m| m.to_string()),
        );
        put("ambiguous_pairs", self.ambiguous_pairs.to_string());
        put("sweep_points", self.sweep_points.to_string());
        s
    }
}

fn parse_pairs(text: &str) -> Result<Vec<(String, String)>> {
    let mut pairs: Vec<(String, String)> = Vec::new();
    for (i, raw) in text.lines().enumerate() {
        let line = raw.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let (k, v) = line
            .split_once('=')
            .ok_or_else(|| Error::Config(format!("line {}: expected key = value, got {raw:?}", i + 1)))?;
        let k = k.trim().to_string();
        if pairs.iter().any(|(pk, _)| *pk == k) {
            return Err(Error::Config(format!("line {}: duplicate key {k}", i + 1)));
        }
        pairs.push((k, v.trim().to_string()));
    }
    Ok(pairs)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn dataset_defaults() {
        let t = ExperimentConfig::defaults(DatasetKind::Thyroid);
        assert_eq!((t.latent_dim, t.alpha, t.pretrain_epochs, t.epochs, t.beta), (2, 0.1, 20, 100, 1.0));
        let arch = t.architecture(6, 2);
        assert_eq!(arch.hidden_widths, vec![5, 3]);
        assert_eq!(arch.head_widths, vec![8]);
        let c = ExperimentConfig::defaults(DatasetKind::Chiller);
        assert_eq!((c.latent_dim, c.pretrain_epochs, c.epochs), (4, 40, 160));
        assert_eq!(c.architecture(16, 7).head_widths.len() + 1, 3);
        let m = ExperimentConfig::defaults(DatasetKind::Digits);
        assert_eq!(m.alpha, 0.05);
        assert_eq!(m.architecture(196, 5).decoder_output, Activation::Sigmoid);
    }

    #[test]
    fn parse_round_trip() {
        let text = "# comment\ndataset = chiller\nseed = 7\nhead_widths = 4, 4\nalpha=0.2 # inline\nmnist_max_per_digit = 30\n";
        let cfg = ExperimentConfig::parse(text).unwrap();
        assert_eq!(cfg.dataset, DatasetKind::Chiller);
        assert_eq!(cfg.seed, 7);
        assert_eq!(cfg.head_widths, vec![4, 4]);
        assert_eq!(cfg.alpha, 0.2);
        assert_eq!(cfg.latent_dim, 4);
        assert_eq!(ExperimentConfig::parse(&cfg.to_kv()).unwrap(), cfg);
    }

    #[test]
    fn parse_errors() {
        assert!(matches!(ExperimentConfig::parse("bogus = 1"), Err(Error::Config(_))));
        assert!(matches!(ExperimentConfig::parse("seed = x"), Err(Error::Config(_))));
        assert!(matches!(ExperimentConfig::parse("seed"), Err(Error::Config(_))));
        assert!(matches!(ExperimentConfig::parse("dataset = iris"), Err(Error::Config(_))));
        assert!(matches!(ExperimentConfig::parse("seed = 1\nseed = 2"), Err(Error::Config(_))));
        let cfg = ExperimentConfig::parse("alpha = 1.5").unwrap();
        assert!(cfg.validate().is_err());
    }

    #[test]
    fn overrides_replace_file_values() {
        let o = vec![("seed".to_string(), "9".to_string()), ("dataset".to_string(), "mnist".to_string())];
        let cfg = ExperimentConfig::with_overrides(Some("dataset = chiller\nseed = 1\nalpha = 0.3"), &o).unwrap();
        assert_eq!((cfg.dataset, cfg.seed, cfg.alpha), (DatasetKind::Digits, 9, 0.3));
    }

    #[test]
    fn benchmark_schedule() {
        let cfg = ExperimentConfig::defaults(DatasetKind::Chiller);
        let aug = cfg.train_config(ModelKind::Augmented);
        assert!(aug.early_stopping.is_none());
        assert_eq!(aug.epochs, 160);
        let clf = cfg.train_config(ModelKind::ClassifierOnly);
        assert_eq!(clf.epochs, 200);
        assert_eq!(clf.early_stopping.unwrap().patience, 10);
    }
}
