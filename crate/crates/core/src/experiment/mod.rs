//! End-to-end pipelines shared by the command line and the examples.

mod artifacts;
mod commands;
mod config;

pub use artifacts::MANIFEST;

use std::fmt::Write as _;

pub use artifacts::{read_thresholds, sha256_hex, thresholds_csv, ArtifactWriter};
pub use commands::{cmd_compare, cmd_evaluate, cmd_report, cmd_score, cmd_train, read_feature_csv, sidecar};
pub use config::{ExperimentConfig, DATA_DIR_ENV};

use crate::data::{
    gen_ambiguous, gen_chiller_surrogate, load_mnist, load_thyroid, split, ChillerConfig, DatasetKind, FeatureStats,
    Group, LabeledDataset, MnistConfig, DEFAULT_T_VALUES,
};
use crate::detect::{
    calibrate_thresholds, evaluate_path, AnomalyScores, MetricsReport, PathReport, ScorePath, ThresholdSet,
};
use crate::error::{Error, Result};
use crate::model::{ModelKind, PathwayNetwork};
use crate::nn::{Matrix, Rng, Sampling};
use crate::report::{lda_fit, separation_score, LdaProjection};
use crate::train::{fit, TrainLog};
use crate::uncertainty::{decompose_entropy, mc_sample, EntropyDecomposition, EntropyGroup, McBatch};

pub const INIT_STREAM: u64 = 100;
pub const CALIBRATION_STREAM: u64 = 200;
pub const EVALUATION_STREAM: u64 = 300;
pub const AMBIGUOUS_STREAM: u64 = 400;

/// Train/test split ready for training, with the statistics that
/// standardised it (thyroid and chiller only).
#[derive(Clone, Debug)]
pub struct Prepared {
    pub train: LabeledDataset,
    pub test: LabeledDataset,
    pub stats: Option<FeatureStats>,
}

pub fn load_dataset(cfg: &ExperimentConfig) -> Result<LabeledDataset> {
    let root = cfg.resolved_data_dir();
    let under = |name: &str| {
        let sub = root.join(name);
        if sub.exists() {
            sub
        } else {
            root.clone()
        }
    };
    match cfg.dataset {
        DatasetKind::Thyroid => load_thyroid(under("thyroid")),
        DatasetKind::Digits => load_mnist(
            under("mnist"),
            &MnistConfig {
                max_per_digit: cfg.mnist_max_per_digit,
                ..MnistConfig::default()
            },
        ),
        DatasetKind::Chiller => gen_chiller_surrogate(
            cfg.seed,
            &ChillerConfig {
                n_per_class: cfg.chiller_n_per_class,
                ..ChillerConfig::default()
            },
        ),
    }
}

pub fn prepare(cfg: &ExperimentConfig) -> Result<Prepared> {
    cfg.validate()?;
    let full = load_dataset(cfg)?;
    let (train, test) = split(&full, cfg.train_fraction, cfg.seed)?;
    if cfg.dataset == DatasetKind::Digits {
        return Ok(Prepared { train, test, stats: None });
    }
    let stats = FeatureStats::fit(&train.normals())?;
    Ok(Prepared {
        train: train.standardize_with(&stats)?,
        test: test.standardize_with(&stats)?,
        stats: Some(stats),
    })
}

/// Builds and trains one model. Every kind starts from the same seed, so
/// the shared encoder layers begin identical across the three models.
pub fn train_model(cfg: &ExperimentConfig, kind: ModelKind, train: &LabeledDataset) -> Result<(PathwayNetwork, TrainLog)> {
    let arch = cfg.architecture(train.dim(), train.n_classes);
    let mut net = PathwayNetwork::build(kind, &arch, &mut Rng::derive(cfg.seed, INIT_STREAM))?;
    let log = fit(&mut net, &train.x, &train.labels()?, &cfg.train_config(kind))?;
    Ok((net, log))
}

/// MC predictions and anomaly scores; `stream` selects the dropout masks.
pub fn mc_scores(cfg: &ExperimentConfig, net: &PathwayNetwork, x: &Matrix, stream: u64) -> Result<(McBatch, AnomalyScores)> {
    let mc = mc_sample(net, x, cfg.mc_samples, &mut Rng::derive(cfg.seed, stream))?;
    let scores = AnomalyScores::from_batch(&mc, x)?;
    Ok((mc, scores))
}

/// Thresholds from the MC scores of the training normals.
pub fn calibrate(cfg: &ExperimentConfig, net: &PathwayNetwork, train: &LabeledDataset) -> Result<ThresholdSet> {
    let (_, scores) = mc_scores(cfg, net, &train.normals(), CALIBRATION_STREAM)?;
    calibrate_thresholds(&scores, cfg.alpha)
}

/// Interpolated digits decoded from `net`'s latent space between test
/// zeros and test fault digits, appended to the test set.
pub fn with_ambiguous(cfg: &ExperimentConfig, net: &PathwayNetwork, test: &LabeledDataset) -> Result<LabeledDataset> {
    if cfg.dataset != DatasetKind::Digits || cfg.ambiguous_pairs == 0 || net.decoder().is_none() {
        return Ok(test.clone());
    }
    let mut rng = Rng::derive(cfg.seed, AMBIGUOUS_STREAM);
    let mut normals = test.indices_where(|g| g == Group::Normal);
    rng.shuffle(&mut normals);
    let mut a = Vec::new();
    let mut b = Vec::new();
    let mut classes = Vec::new();
    for k in 1..test.n_classes {
        let mut faults = test.indices_where(|g| g == Group::Fault(k));
        rng.shuffle(&mut faults);
        let n = cfg.ambiguous_pairs.min(faults.len()).min(normals.len());
        a.extend_from_slice(&normals[..n]);
        b.extend_from_slice(&faults[..n]);
        classes.extend(std::iter::repeat_n(k, n));
    }
    if a.is_empty() {
        return Ok(test.clone());
    }
    let amb = gen_ambiguous(net, &test.x.select_rows(&a), &test.x.select_rows(&b), &classes, &DEFAULT_T_VALUES)?;
    Ok(test.concat(&amb)?.sorted_by_group())
}

/// Deterministic latent codes.
pub fn latent(net: &PathwayNetwork, x: &Matrix) -> Result<Matrix> {
    net.encode(x, &mut Rng::seed(0), Sampling::Deterministic)
}

/// Table row name of each example, in order.
pub fn group_names(ds: &LabeledDataset) -> Vec<String> {
    ds.groups.iter().map(|&g| ds.kind.table_group(g)).collect()
}

/// LDA fitted on the in-distribution examples of `ds` (normal and trainable
/// faults) and applied to all of them, plus the separation score of the
/// projected table groups.
pub fn latent_lda(net: &PathwayNetwork, ds: &LabeledDataset) -> Result<(LdaProjection, Matrix, f64)> {
    let z = latent(net, &ds.x)?;
    let fit_idx = ds.indices_where(Group::trainable);
    let fit_labels: Vec<usize> = fit_idx.iter().map(|&i| ds.groups[i].label().unwrap_or(0)).collect();
    let out_dims = ds.n_classes.saturating_sub(1).clamp(1, 2);
    let lda = lda_fit(&z.select_rows(&fit_idx), &fit_labels, out_dims)?;
    let projected = lda.project(&z)?;
    let names = group_names(ds);
    let mut order: Vec<&String> = Vec::new();
    for n in &names {
        if !order.contains(&n) {
            order.push(n);
        }
    }
    let labels: Vec<usize> = names.iter().map(|n| order.iter().position(|o| *o == n).unwrap_or(0)).collect();
    let score = separation_score(&projected, &labels)?;
    Ok((lda, projected, score))
}

/// Everything measured for one trained model.
#[derive(Clone, Debug)]
pub struct ModelRun {
    pub kind: ModelKind,
    pub net: PathwayNetwork,
    pub log: TrainLog,
    pub thresholds: ThresholdSet,
    pub paths: Vec<PathReport>,
    pub entropy: Option<EntropyDecomposition>,
    /// Mean predictive entropy over the out-of-distribution test examples.
    pub ood_mean_entropy: Option<f64>,
    /// Latent LDA separation of the table groups (decoder models only).
    pub separation: Option<f64>,
}

/// Calibrates and evaluates a trained model on `test`.
pub fn assess(
    cfg: &ExperimentConfig,
    net: PathwayNetwork,
    log: TrainLog,
    train: &LabeledDataset,
    test: &LabeledDataset,
) -> Result<ModelRun> {
    let thresholds = calibrate(cfg, &net, train)?;
    assess_with(cfg, net, log, thresholds, test)
}

/// Evaluates a trained model on `test` against fixed thresholds.
pub fn assess_with(
    cfg: &ExperimentConfig,
    net: PathwayNetwork,
    log: TrainLog,
    thresholds: ThresholdSet,
    test: &LabeledDataset,
) -> Result<ModelRun> {
    let (mc, scores) = mc_scores(cfg, &net, &test.x, EVALUATION_STREAM)?;
    let tags = test.tags();
    let kind = net.kind();
    let mut paths = Vec::new();
    if kind.has_decoder() {
        paths.push(evaluate_path(kind, ScorePath::Decoding, &scores, &thresholds, &tags, false, cfg.sweep_points)?);
    }
    let (mut entropy, mut ood_mean_entropy) = (None, None);
    if let Some(means) = &mc.class_mean {
        let diagnose = test.n_classes > 2;
        paths.push(evaluate_path(
            kind,
            ScorePath::Classifying,
            &scores,
            &thresholds,
            &tags,
            diagnose,
            cfg.sweep_points,
        )?);
        let groups = test.entropy_groups();
        let d = decompose_entropy(means, &groups)?;
        let n_ood = groups.iter().filter(|g| **g == Some(EntropyGroup::OutOfDistribution)).count();
        ood_mean_entropy = (n_ood > 0).then(|| d.p1_ood / n_ood as f64);
        entropy = Some(d);
    }
    let separation = if kind.has_decoder() { Some(latent_lda(&net, test)?.2) } else { None };
    Ok(ModelRun {
        kind,
        net,
        log,
        thresholds,
        paths,
        entropy,
        ood_mean_entropy,
        separation,
    })
}

/// All three models trained and evaluated on the same split.
#[derive(Clone, Debug)]
pub struct Comparison {
    pub prepared: Prepared,
    /// Test set the models were evaluated on (with ambiguous digits for MNIST).
    pub test: LabeledDataset,
    pub runs: Vec<ModelRun>,
    pub report: MetricsReport,
}

impl Comparison {
    pub fn run(&self, kind: ModelKind) -> Option<&ModelRun> {
        self.runs.iter().find(|r| r.kind == kind)
    }

    /// `model,p0,p1_in,p1_ood,total,ood_mean` for models with a head.
    pub fn entropy_csv(&self) -> String {
        let mut s = String::from("model,p0,p1_in,p1_ood,total,ood_mean\n");
        for r in &self.runs {
            if let Some(d) = r.entropy {
                let _ = writeln!(
                    s,
                    "{},{:.6},{:.6},{:.6},{:.6},{}",
                    r.kind.name(),
                    d.p0,
                    d.p1_in,
                    d.p1_ood,
                    d.total,
                    r.ood_mean_entropy.map_or("-".into(), |v| format!("{v:.6}"))
                );
            }
        }
        s
    }

    pub fn separation_csv(&self) -> String {
        let mut s = String::from("model,separation\n");
        for r in &self.runs {
            if let Some(v) = r.separation {
                let _ = writeln!(s, "{},{v:.6}", r.kind.name());
            }
        }
        s
    }
}

pub fn compare(cfg: &ExperimentConfig) -> Result<Comparison> {
    let prepared = prepare(cfg)?;
    let (aug, aug_log) = train_model(cfg, ModelKind::Augmented, &prepared.train)?;
    let test = with_ambiguous(cfg, &aug, &prepared.test)?;
    let mut runs = vec![assess(cfg, aug, aug_log, &prepared.train, &test)?];
    for kind in [ModelKind::ClassifierOnly, ModelKind::AutoencoderOnly] {
        let (net, log) = train_model(cfg, kind, &prepared.train)?;
        runs.push(assess(cfg, net, log, &prepared.train, &test)?);
    }
    let report = MetricsReport {
        dataset: cfg.dataset.name().into(),
        alpha: cfg.alpha,
        paths: runs.iter().flat_map(|r| r.paths.iter().cloned()).collect(),
    };
    Ok(Comparison {
        prepared,
        test,
        runs,
        report,
    })
}

/// Checks that a loaded network fits the configured dataset.
pub fn check_compatible(net: &PathwayNetwork, ds: &LabeledDataset) -> Result<()> {
    if net.input_dim() != ds.dim() || net.n_classes() != ds.n_classes {
        return Err(Error::Config(format!(
            "model expects {} features and {} classes, the {} data has {} and {}",
            net.input_dim(),
            net.n_classes(),
            ds.kind.name(),
            ds.dim(),
            ds.n_classes
        )));
    }
    Ok(())
}
